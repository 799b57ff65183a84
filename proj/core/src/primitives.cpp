#include "secrecy/primitives.hpp"

#include <algorithm>
#include <bit>

#include "secrecy/error.hpp"
#include "secrecy/util.hpp"

namespace secrecy {

SVec SVec::slice(std::size_t begin, std::size_t count) const {
  SVec r;
  r.mode = mode;
  r.bits = bits;
  r.lo.assign(lo.begin() + begin, lo.begin() + begin + count);
  r.hi.assign(hi.begin() + begin, hi.begin() + begin + count);
  return r;
}

SVec SVec::gather(std::span<const std::size_t> idx) const {
  SVec r(idx.size(), mode, bits);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    r.lo[i] = lo[idx[i]];
    r.hi[i] = hi[idx[i]];
  }
  return r;
}

void SVec::append(const SVec& o) {
  lo.insert(lo.end(), o.lo.begin(), o.lo.end());
  hi.insert(hi.end(), o.hi.begin(), o.hi.end());
}

SVec SVec::concat(const std::vector<const SVec*>& parts) {
  SVec r;
  if (!parts.empty()) {
    r.mode = parts.front()->mode;
    r.bits = parts.front()->bits;
  }
  std::size_t n = 0;
  for (auto* s : parts) n += s->size();
  r.lo.reserve(n);
  r.hi.reserve(n);
  for (auto* s : parts) r.append(*s);
  return r;
}

namespace gates {
namespace {

void check_len(const SVec& x, const SVec& y) {
  if (x.size() != y.size())
    throw Error(Errc::LengthMismatch, std::to_string(x.size()) + " vs " + std::to_string(y.size()));
}

void check_mode(const SVec& x, Mode m) {
  if (x.mode != m) throw Error(Errc::ModeMismatch, "operand has the wrong sharing mode");
}

void check_same(const SVec& x, const SVec& y, Mode m) {
  check_len(x, y);
  check_mode(x, m);
  check_mode(y, m);
}

Word width_mask(unsigned w) { return w >= kWordBits ? ~Word{0} : (Word{1} << w) - 1; }

}  // namespace

SVec constant(const Party& p, std::span<const Word> values, Mode m, unsigned bits) {
  SVec r(values.size(), m, bits);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (p.id() == 0) r.lo[i] = values[i];
    if (p.id() == 2) r.hi[i] = values[i];
  }
  return r;
}

SVec constant(const Party& p, Word value, std::size_t n, Mode m, unsigned bits) {
  std::vector<Word> v(n, value);
  return constant(p, v, m, bits);
}

SVec random(Party& p, std::size_t n, Mode m, unsigned bits) {
  SVec r(n, m, bits);
  const Word wm = bits == 1 ? 1 : p.mask();
  for (std::size_t i = 0; i < n; ++i) {
    auto s = p.keys().random_share(m);
    r.lo[i] = s.lo & wm;
    r.hi[i] = s.hi & wm;
  }
  return r;
}

SVec masked(const Party& p, SVec x) {
  const Word wm = x.bits == 1 ? 1 : p.mask();
  for (auto& w : x.lo) w &= wm;
  for (auto& w : x.hi) w &= wm;
  return x;
}

SVec xor_raw(const SVec& x, const SVec& y) {
  check_same(x, y, Mode::Boolean);
  SVec r(x.size(), Mode::Boolean, std::max(x.bits, y.bits));
  for (std::size_t i = 0; i < x.size(); ++i) {
    r.lo[i] = x.lo[i] ^ y.lo[i];
    r.hi[i] = x.hi[i] ^ y.hi[i];
  }
  return r;
}

SVec xor_(Party& p, const SVec& x, const SVec& y) {
  SVec r = xor_raw(x, y);
  p.count(r.size() * r.bits);
  return r;
}

SVec xor_public(const Party& p, SVec x, Word c) {
  check_mode(x, Mode::Boolean);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (p.id() == 0) x.lo[i] ^= c;
    if (p.id() == 2) x.hi[i] ^= c;
  }
  return x;
}

SVec not_(const Party& p, const SVec& x) { return xor_public(p, x, x.bits == 1 ? 1 : p.mask()); }

SVec expand(const Party& p, const SVec& bit) {
  check_mode(bit, Mode::Boolean);
  SVec r(bit.size(), Mode::Boolean, p.width());
  for (std::size_t i = 0; i < bit.size(); ++i) {
    r.lo[i] = (Word{0} - (bit.lo[i] & 1)) & p.mask();
    r.hi[i] = (Word{0} - (bit.hi[i] & 1)) & p.mask();
  }
  return r;
}

SVec bit_at(const SVec& x, unsigned j) {
  check_mode(x, Mode::Boolean);
  SVec r(x.size(), Mode::Boolean, 1);
  for (std::size_t i = 0; i < x.size(); ++i) {
    r.lo[i] = (x.lo[i] >> j) & 1;
    r.hi[i] = (x.hi[i] >> j) & 1;
  }
  return r;
}

SVec ltz(const Party& p, const SVec& x) { return bit_at(x, p.width() - 1); }

SVec add(Party& p, const SVec& x, const SVec& y) {
  check_same(x, y, Mode::Arithmetic);
  SVec r(x.size(), Mode::Arithmetic, std::max(x.bits, y.bits));
  for (std::size_t i = 0; i < x.size(); ++i) {
    r.lo[i] = x.lo[i] + y.lo[i];
    r.hi[i] = x.hi[i] + y.hi[i];
  }
  p.count(r.size());
  return r;
}

SVec sub(Party& p, const SVec& x, const SVec& y) {
  check_same(x, y, Mode::Arithmetic);
  SVec r(x.size(), Mode::Arithmetic, std::max(x.bits, y.bits));
  for (std::size_t i = 0; i < x.size(); ++i) {
    r.lo[i] = x.lo[i] - y.lo[i];
    r.hi[i] = x.hi[i] - y.hi[i];
  }
  p.count(r.size());
  return r;
}

SVec scale(Party& p, Word c, const SVec& x) {
  check_mode(x, Mode::Arithmetic);
  SVec r = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    r.lo[i] *= c;
    r.hi[i] *= c;
  }
  p.count(r.size());
  return r;
}

SVec add_public(const Party& p, SVec x, Word c) {
  check_mode(x, Mode::Arithmetic);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (p.id() == 0) x.lo[i] += c;
    if (p.id() == 2) x.hi[i] += c;
  }
  return x;
}

SVec lift(const Party& p, const SVec& bit, int k) {
  check_mode(bit, Mode::Boolean);
  SVec r(bit.size(), Mode::Arithmetic, 1);
  const bool own_lo = p.id() == k;
  const bool own_hi = successor(p.id()) == k;
  for (std::size_t i = 0; i < bit.size(); ++i) {
    r.lo[i] = own_lo ? bit.lo[i] & 1 : 0;
    r.hi[i] = own_hi ? bit.hi[i] & 1 : 0;
  }
  return r;
}

Task<SVec> and_raw(Party& p, SVec x, SVec y) {
  check_same(x, y, Mode::Boolean);
  const std::size_t n = x.size();
  std::vector<Word> u(n);
  for (std::size_t i = 0; i < n; ++i)
    u[i] = (x.lo[i] & y.lo[i]) ^ (x.lo[i] & y.hi[i]) ^ (x.hi[i] & y.lo[i]) ^ p.keys().zero_bool();
  const std::size_t off = p.post(u);
  co_await p.round();
  SVec z(n, Mode::Boolean, std::max(x.bits, y.bits));
  for (std::size_t i = 0; i < n; ++i) {
    z.lo[i] = p.received(off + i);
    z.hi[i] = u[i];
  }
  co_return z;
}

Task<SVec> mul_raw(Party& p, SVec x, SVec y) {
  check_same(x, y, Mode::Arithmetic);
  const std::size_t n = x.size();
  std::vector<Word> u(n);
  for (std::size_t i = 0; i < n; ++i)
    u[i] = x.lo[i] * y.lo[i] + x.lo[i] * y.hi[i] + x.hi[i] * y.lo[i] + p.keys().zero_arith();
  const std::size_t off = p.post(u);
  co_await p.round();
  SVec z(n, Mode::Arithmetic, std::max(x.bits, y.bits));
  for (std::size_t i = 0; i < n; ++i) {
    z.lo[i] = p.received(off + i);
    z.hi[i] = u[i];
  }
  co_return z;
}

Task<SVec> and_(Party& p, SVec x, SVec y) {
  auto t = and_raw(p, std::move(x), std::move(y));
  SVec z = co_await std::move(t);
  z = masked(p, std::move(z));
  p.count(z.size() * z.bits, z.size() * z.bits);
  co_return z;
}

Task<SVec> or_(Party& p, SVec x, SVec y) {
  SVec nx = not_(p, x);
  SVec ny = not_(p, y);
  auto t = and_raw(p, std::move(nx), std::move(ny));
  SVec z = co_await std::move(t);
  z = masked(p, not_(p, z));
  p.count(z.size() * z.bits, z.size() * z.bits);
  co_return z;
}

Task<SVec> mux(Party& p, SVec b, SVec x, SVec y) {
  check_same(x, y, Mode::Boolean);
  check_len(b, x);
  const std::size_t n = x.size();
  SVec bl = x.bits == 1 ? masked(p, b) : expand(p, b);
  SVec nbl = not_(p, bl);
  SVec lhs = SVec::concat({&bl, &nbl});
  SVec rhs = SVec::concat({&x, &y});
  auto t = and_raw(p, std::move(lhs), std::move(rhs));
  SVec prod = co_await std::move(t);
  SVec z = xor_raw(prod.slice(0, n), prod.slice(n, n));
  z.bits = x.bits;
  p.count(3 * n, 2 * n);
  co_return masked(p, std::move(z));
}

Task<SVec> mul(Party& p, SVec x, SVec y) {
  auto t = mul_raw(p, std::move(x), std::move(y));
  SVec z = co_await std::move(t);
  p.count(z.size(), z.size());
  co_return z;
}

namespace {

// x XOR y evaluated as x + y - 2xy over arithmetic bits, without accounting.
Task<SVec> arith_xor(Party& p, SVec x, SVec y) {
  auto t = mul_raw(p, x, y);
  SVec m = co_await std::move(t);
  SVec r(x.size(), Mode::Arithmetic, 1);
  for (std::size_t i = 0; i < x.size(); ++i) {
    r.lo[i] = x.lo[i] + y.lo[i] - 2 * m.lo[i];
    r.hi[i] = x.hi[i] + y.hi[i] - 2 * m.hi[i];
  }
  co_return r;
}

Task<SVec> b2a_bits_raw(Party& p, SVec bit) {
  SVec a = lift(p, bit, 0);
  SVec b = lift(p, bit, 1);
  SVec c = lift(p, bit, 2);
  auto t1 = arith_xor(p, std::move(a), std::move(b));
  SVec ab = co_await std::move(t1);
  auto t2 = arith_xor(p, std::move(ab), std::move(c));
  SVec r = co_await std::move(t2);
  co_return r;
}

}  // namespace

Task<SVec> b2a_bit(Party& p, SVec bit) {
  check_mode(bit, Mode::Boolean);
  const std::size_t n = bit.size();
  auto t = b2a_bits_raw(p, std::move(bit));
  SVec r = co_await std::move(t);
  p.count(8 * n, 2 * n);
  co_return r;
}

Task<SVec> b2a(Party& p, SVec x) {
  check_mode(x, Mode::Boolean);
  const std::size_t n = x.size();
  const unsigned w = p.width();
  std::vector<SVec> planes;
  planes.reserve(w);
  for (unsigned j = 0; j < w; ++j) planes.push_back(bit_at(x, j));
  std::vector<const SVec*> parts;
  for (auto& pl : planes) parts.push_back(&pl);
  SVec all = SVec::concat(parts);
  auto t = b2a_bits_raw(p, std::move(all));
  SVec a = co_await std::move(t);
  SVec r(n, Mode::Arithmetic, w);
  for (unsigned j = 0; j < w; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      r.lo[i] += a.lo[j * n + i] << j;
      r.hi[i] += a.hi[j * n + i] << j;
    }
  // per bit: conversion (8), then weighting and summation (2w - 1 per word)
  p.count(n * (10 * w - 1), n * 2 * w);
  co_return r;
}

Task<SVec> a2b(Party& p, SVec x) {
  check_mode(x, Mode::Arithmetic);
  const std::size_t n = x.size();
  // Party 0 holds x0 and x1 and reshares v = x0 + x1 as (r, v ^ r, 0) where r
  // comes from the stream it shares with party 2. Every party posts so the
  // round is symmetric.
  std::vector<Word> out(n, 0);
  SVec v(n, Mode::Boolean, p.width());
  for (std::size_t i = 0; i < n; ++i) {
    if (p.id() == 0) {
      const Word r = p.keys().prev.next() & p.mask();
      const Word s = (x.lo[i] + x.hi[i]) & p.mask();
      out[i] = s ^ r;
      v.lo[i] = r;
      v.hi[i] = s ^ r;
    } else if (p.id() == 2) {
      v.hi[i] = p.keys().next.next() & p.mask();
    }
  }
  const std::size_t off = p.post(out);
  co_await p.round();
  if (p.id() == 1)
    for (std::size_t i = 0; i < n; ++i) v.lo[i] = p.received(off + i);
  SVec x2(n, Mode::Boolean, p.width());
  for (std::size_t i = 0; i < n; ++i) {
    if (p.id() == 1) x2.hi[i] = x.hi[i] & p.mask();
    if (p.id() == 2) x2.lo[i] = x.lo[i] & p.mask();
  }
  p.count(n * (1 + p.width()));
  auto t = rca(p, std::move(v), std::move(x2));
  SVec r = co_await std::move(t);
  co_return r;
}

Task<SVec> rca(Party& p, SVec x, SVec y, bool carry_in) {
  check_same(x, y, Mode::Boolean);
  const std::size_t n = x.size();
  const unsigned w = p.width();
  SVec out(n, Mode::Boolean, w);
  auto put = [&](const SVec& s, unsigned j) {
    for (std::size_t i = 0; i < n; ++i) {
      out.lo[i] |= (s.lo[i] & 1) << j;
      out.hi[i] |= (s.hi[i] & 1) << j;
    }
  };
  SVec x0 = bit_at(x, 0);
  SVec y0 = bit_at(y, 0);
  SVec c;
  if (carry_in) {
    put(not_(p, xor_raw(x0, y0)), 0);
    SVec nx = not_(p, x0);
    SVec ny = not_(p, y0);
    auto t = and_raw(p, std::move(nx), std::move(ny));
    SVec both0 = co_await std::move(t);
    c = masked(p, not_(p, both0));
  } else {
    put(xor_raw(x0, y0), 0);
    auto t = and_raw(p, x0, y0);
    SVec c0 = co_await std::move(t);
    c = masked(p, std::move(c0));
  }
  for (unsigned j = 1; j < w; ++j) {
    SVec xj = bit_at(x, j);
    SVec yj = bit_at(y, j);
    SVec t1 = xor_raw(xj, c);
    SVec t2 = xor_raw(yj, c);
    put(xor_raw(t1, yj), j);
    auto t = and_raw(p, std::move(t1), std::move(t2));
    SVec prod = co_await std::move(t);
    c = masked(p, xor_raw(c, prod));
  }
  p.count(n * (5 * w - 3), n * w);
  co_return out;
}

Task<SVec> rca_sub(Party& p, SVec x, SVec y) {
  SVec ny = not_(p, y);
  auto t = rca(p, std::move(x), std::move(ny), true);
  SVec r = co_await std::move(t);
  co_return r;
}

namespace {

struct Level {
  Word pair = 0;    // positions whose upper neighbour group exists
  Word single = 0;  // positions carried through unchanged
};

// Groups of size 2s are combined from two groups of size s; each group's
// value sits at its lowest bit position.
Level level_masks(unsigned w, unsigned s) {
  Level m;
  for (unsigned pos = 0; pos < w; pos += 2 * s) {
    if (pos + s < w)
      m.pair |= Word{1} << pos;
    else
      m.single |= Word{1} << pos;
  }
  return m;
}

unsigned popcount(Word w) { return static_cast<unsigned>(std::popcount(w)); }

SVec shr_and(const SVec& x, unsigned s, Word m) {
  SVec r = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    r.lo[i] = (x.lo[i] >> s) & m;
    r.hi[i] = (x.hi[i] >> s) & m;
  }
  return r;
}

SVec and_mask(const SVec& x, Word m) { return shr_and(x, 0, m); }

}  // namespace

Task<SVec> lt_multi(Party& p, std::vector<SVec> x, std::vector<SVec> y, std::vector<Unit> units) {
  const std::size_t k = units.size();
  if (k == 0 || x.size() != k || y.size() != k) throw Error(Errc::LengthMismatch, "comparator unit count");
  const std::size_t n = x[0].size();
  std::vector<unsigned> w(k);
  std::vector<SVec> e(k), g(k);
  std::vector<SVec> na(k), b(k);
  std::uint64_t ops = 0, remote = 0;
  for (std::size_t u = 0; u < k; ++u) {
    check_same(x[u], y[u], Mode::Boolean);
    if (x[u].size() != n) throw Error(Errc::LengthMismatch, "comparator units differ in length");
    w[u] = x[u].bits == 1 ? 1 : p.width();
    const Word wm = width_mask(w[u]);
    SVec a = and_mask(x[u], wm);
    SVec bb = and_mask(y[u], wm);
    if (units[u].is_signed && w[u] > 1) {
      a = xor_public(p, std::move(a), Word{1} << (w[u] - 1));
      bb = xor_public(p, std::move(bb), Word{1} << (w[u] - 1));
    }
    if (units[u].desc) std::swap(a, bb);
    e[u] = xor_public(p, xor_raw(a, bb), wm);
    na[u] = xor_public(p, a, wm);
    b[u] = std::move(bb);
    ops += 2 * w[u];
    remote += w[u];
  }
  {
    std::vector<const SVec*> lhs, rhs;
    for (std::size_t u = 0; u < k; ++u) {
      lhs.push_back(&na[u]);
      rhs.push_back(&b[u]);
    }
    SVec l = SVec::concat(lhs);
    SVec r = SVec::concat(rhs);
    auto t = and_raw(p, std::move(l), std::move(r));
    SVec leaves = co_await std::move(t);
    for (std::size_t u = 0; u < k; ++u) g[u] = leaves.slice(u * n, n);
  }

  unsigned max_levels = 0;
  for (auto wu : w) max_levels = std::max(max_levels, ceil_log2(wu));
  for (unsigned L = 0; L < max_levels; ++L) {
    const unsigned s = 1u << L;
    std::vector<SVec> lhs, rhs;
    struct Slot {
      std::size_t unit;
      Level m;
      bool need_e;
      SVec gh;
    };
    std::vector<Slot> slots;
    for (std::size_t u = 0; u < k; ++u) {
      if (L >= ceil_log2(w[u])) continue;
      const Level m = level_masks(w[u], s);
      const bool root = 2 * s >= w[u];
      const bool need_e = !(root && k == 1);
      SVec eh = shr_and(e[u], s, m.pair);
      lhs.push_back(eh);
      rhs.push_back(and_mask(g[u], m.pair));
      if (need_e) {
        lhs.push_back(eh);
        rhs.push_back(and_mask(e[u], m.pair));
      }
      ops += popcount(m.pair) * (need_e ? 2 : 1);
      remote += popcount(m.pair) * (need_e ? 2 : 1);
      slots.push_back({u, m, need_e, shr_and(g[u], s, m.pair)});
    }
    std::vector<const SVec*> lp, rp;
    for (auto& v : lhs) lp.push_back(&v);
    for (auto& v : rhs) rp.push_back(&v);
    SVec l = SVec::concat(lp);
    SVec r = SVec::concat(rp);
    auto t = and_raw(p, std::move(l), std::move(r));
    SVec prod = co_await std::move(t);
    std::size_t off = 0;
    for (auto& sl : slots) {
      const std::size_t u = sl.unit;
      SVec eg = and_mask(prod.slice(off, n), sl.m.pair);
      off += n;
      SVec ng = xor_raw(xor_raw(sl.gh, eg), and_mask(g[u], sl.m.single));
      if (sl.need_e) {
        SVec ee = and_mask(prod.slice(off, n), sl.m.pair);
        off += n;
        e[u] = xor_raw(ee, and_mask(e[u], sl.m.single));
      }
      g[u] = std::move(ng);
    }
  }

  // Combine units, most significant first.
  for (auto& v : e) v = and_mask(v, 1);
  for (auto& v : g) v = and_mask(v, 1);
  while (e.size() > 1) {
    const std::size_t cnt = e.size();
    const bool root = cnt == 2;
    std::vector<const SVec*> lp, rp;
    for (std::size_t i = 0; i + 1 < cnt; i += 2) {
      lp.push_back(&e[i]);
      rp.push_back(&g[i + 1]);
      if (!root) {
        lp.push_back(&e[i]);
        rp.push_back(&e[i + 1]);
      }
      ops += root ? 1 : 2;
      remote += root ? 1 : 2;
    }
    SVec l = SVec::concat(lp);
    SVec r = SVec::concat(rp);
    auto t = and_raw(p, std::move(l), std::move(r));
    SVec prod = co_await std::move(t);
    std::vector<SVec> ne, ng;
    std::size_t off = 0;
    for (std::size_t i = 0; i + 1 < cnt; i += 2) {
      ng.push_back(xor_raw(g[i], and_mask(prod.slice(off, n), 1)));
      off += n;
      if (!root) {
        ne.push_back(and_mask(prod.slice(off, n), 1));
        off += n;
      } else {
        ne.push_back(SVec(n, Mode::Boolean, 1));
      }
    }
    if (cnt % 2) {
      ne.push_back(std::move(e.back()));
      ng.push_back(std::move(g.back()));
    }
    e = std::move(ne);
    g = std::move(ng);
  }
  p.count(n * ops, n * remote);
  SVec out = std::move(g[0]);
  out.bits = 1;
  co_return out;
}

Task<SVec> eq_multi(Party& p, std::vector<SVec> x, std::vector<SVec> y) {
  const std::size_t k = x.size();
  if (k == 0 || y.size() != k) throw Error(Errc::LengthMismatch, "comparator unit count");
  const std::size_t n = x[0].size();
  std::vector<unsigned> w(k);
  std::vector<SVec> e(k);
  std::uint64_t ops = 0, remote = 0;
  for (std::size_t u = 0; u < k; ++u) {
    check_same(x[u], y[u], Mode::Boolean);
    if (x[u].size() != n) throw Error(Errc::LengthMismatch, "comparator units differ in length");
    w[u] = x[u].bits == 1 ? 1 : p.width();
    const Word wm = width_mask(w[u]);
    e[u] = xor_public(p, and_mask(xor_raw(x[u], y[u]), wm), wm);
    ops += w[u];
  }
  unsigned max_levels = 0;
  for (auto wu : w) max_levels = std::max(max_levels, ceil_log2(wu));
  for (unsigned L = 0; L < max_levels; ++L) {
    const unsigned s = 1u << L;
    std::vector<SVec> lhs, rhs;
    std::vector<std::pair<std::size_t, Level>> slots;
    for (std::size_t u = 0; u < k; ++u) {
      if (L >= ceil_log2(w[u])) continue;
      const Level m = level_masks(w[u], s);
      lhs.push_back(shr_and(e[u], s, m.pair));
      rhs.push_back(and_mask(e[u], m.pair));
      ops += popcount(m.pair);
      remote += popcount(m.pair);
      slots.emplace_back(u, m);
    }
    std::vector<const SVec*> lp, rp;
    for (auto& v : lhs) lp.push_back(&v);
    for (auto& v : rhs) rp.push_back(&v);
    SVec l = SVec::concat(lp);
    SVec r = SVec::concat(rp);
    auto t = and_raw(p, std::move(l), std::move(r));
    SVec prod = co_await std::move(t);
    std::size_t off = 0;
    for (auto& [u, m] : slots) {
      e[u] = xor_raw(and_mask(prod.slice(off, n), m.pair), and_mask(e[u], m.single));
      off += n;
    }
  }
  for (auto& v : e) v = and_mask(v, 1);
  while (e.size() > 1) {
    const std::size_t cnt = e.size();
    std::vector<const SVec*> lp, rp;
    for (std::size_t i = 0; i + 1 < cnt; i += 2) {
      lp.push_back(&e[i]);
      rp.push_back(&e[i + 1]);
      ++ops;
      ++remote;
    }
    SVec l = SVec::concat(lp);
    SVec r = SVec::concat(rp);
    auto t = and_raw(p, std::move(l), std::move(r));
    SVec prod = co_await std::move(t);
    std::vector<SVec> ne;
    for (std::size_t i = 0; i + 1 < cnt; i += 2) ne.push_back(and_mask(prod.slice((i / 2) * n, n), 1));
    if (cnt % 2) ne.push_back(std::move(e.back()));
    e = std::move(ne);
  }
  p.count(n * ops, n * remote);
  SVec out = std::move(e[0]);
  out.bits = 1;
  co_return out;
}

Task<SVec> eq(Party& p, SVec x, SVec y) {
  std::vector<SVec> xs{std::move(x)};
  std::vector<SVec> ys{std::move(y)};
  auto t = eq_multi(p, std::move(xs), std::move(ys));
  SVec r = co_await std::move(t);
  co_return r;
}

Task<SVec> lt(Party& p, SVec x, SVec y) {
  std::vector<SVec> xs{std::move(x)};
  std::vector<SVec> ys{std::move(y)};
  std::vector<Unit> us{Unit{}};
  auto t = lt_multi(p, std::move(xs), std::move(ys), std::move(us));
  SVec r = co_await std::move(t);
  co_return r;
}

Task<Swapped> compare_swap(Party& p, SVec x, SVec y) {
  auto tc = lt(p, x, y);
  SVec c = co_await std::move(tc);
  const std::size_t n = x.size();
  SVec bl = x.bits == 1 ? c : expand(p, c);
  SVec nbl = not_(p, bl);
  SVec lhs = SVec::concat({&bl, &nbl, &bl, &nbl});
  SVec rhs = SVec::concat({&x, &y, &y, &x});
  auto t = and_raw(p, std::move(lhs), std::move(rhs));
  SVec prod = co_await std::move(t);
  Swapped out{xor_raw(prod.slice(0, n), prod.slice(n, n)), xor_raw(prod.slice(2 * n, n), prod.slice(3 * n, n))};
  out.min = masked(p, std::move(out.min));
  out.max = masked(p, std::move(out.max));
  out.min.bits = out.max.bits = x.bits;
  p.count(6 * n, 4 * n);
  co_return out;
}

Task<std::vector<Word>> open(Party& p, SVec x) {
  const std::size_t off = p.post(x.lo);
  co_await p.round();
  std::vector<Word> v(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Word prev = p.received(off + i);
    v[i] = (x.mode == Mode::Boolean ? (prev ^ x.lo[i] ^ x.hi[i]) : (prev + x.lo[i] + x.hi[i])) & p.mask();
  }
  co_return v;
}

}  // namespace gates
}  // namespace secrecy
