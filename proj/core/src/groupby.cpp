#include <algorithm>

#include "eval.hpp"
#include "secrecy/error.hpp"
#include "secrecy/operators.hpp"
#include "secrecy/util.hpp"

namespace secrecy::ops {

using namespace detail;

namespace {

enum class AccKind { Dual, Ripple, MinMax };

struct Acc {
  AggSpec spec;
  AccKind kind = AccKind::Ripple;
  SVec v;
  bool is_public_count = false;  // COUNT over a table without flags
};

std::vector<AggSpec> flatten(const std::vector<AggSpec>& aggs) {
  std::vector<AggSpec> out;
  for (const auto& a : aggs) {
    if (a.fn == AggFn::Avg) {
      out.push_back({AggFn::Sum, a.col, a.out + "_sum"});
      out.push_back({AggFn::Count, "", a.out + "_cnt"});
    } else {
      out.push_back(a);
    }
  }
  return out;
}

void put(SVec& dst, std::size_t at, const SVec& src) {
  std::copy(src.lo.begin(), src.lo.end(), dst.lo.begin() + static_cast<std::ptrdiff_t>(at));
  std::copy(src.hi.begin(), src.hi.end(), dst.hi.begin() + static_cast<std::ptrdiff_t>(at));
}

SVec repeat(const SVec& v, std::size_t k) {
  std::vector<const SVec*> parts(k, &v);
  return SVec::concat(parts);
}

Task<> a2b_in_place(Party& p, SVec* x) {
  auto t = gates::a2b(p, *x);
  *x = co_await std::move(t);
}

Word dead_value(const Party& p, AggFn fn) { return fn == AggFn::Min ? p.mask() >> 1 : p.msb(); }

// Accumulators seeded from the live bit, in two lockstep phases.
Task<std::vector<Acc>> init_accs(Party& p, const SharedTable* t, std::optional<SVec> live,
                                 std::vector<AggSpec> aggs, bool dual) {
  const std::size_t n = t->rows;
  std::vector<Acc> accs;
  for (const auto& a : flatten(aggs)) {
    Acc acc;
    acc.spec = a;
    const bool additive = a.fn == AggFn::Count || a.fn == AggFn::Sum;
    acc.kind = (a.fn == AggFn::Min || a.fn == AggFn::Max) ? AccKind::MinMax
               : (dual && additive)                      ? AccKind::Dual
                                                         : AccKind::Ripple;
    if (a.fn != AggFn::Count) acc.v = t->col(a.col);
    accs.push_back(std::move(acc));
  }
  SVec la;
  bool need_la = false;
  std::vector<Task<>> phase1;
  for (auto& acc : accs) {
    if (acc.kind == AccKind::Dual) {
      if (live) need_la = true;
      if (acc.spec.fn == AggFn::Sum && acc.v.mode == Mode::Boolean) phase1.push_back(store(gates::b2a(p, acc.v), &acc.v));
    } else if (acc.spec.fn != AggFn::Count && acc.v.mode == Mode::Arithmetic) {
      phase1.push_back(a2b_in_place(p, &acc.v));
    }
  }
  if (need_la) phase1.push_back(store(gates::b2a_bit(p, *live), &la));
  {
    auto all = run_all(p, std::move(phase1));
    co_await std::move(all);
  }
  std::vector<Task<>> phase2;
  for (auto& acc : accs) {
    const bool count = acc.spec.fn == AggFn::Count;
    if (acc.kind == AccKind::Dual) {
      if (count) {
        if (live) {
          acc.v = la;
          acc.v.bits = p.width();
        } else {
          acc.v = gates::constant(p, 1, n, Mode::Arithmetic, p.width());
          acc.is_public_count = true;
        }
      } else if (live) {
        phase2.push_back(store(gates::mul(p, la, acc.v), &acc.v));
      }
    } else if (count) {
      if (live) {
        acc.v = gates::bit_at(*live, 0);
        acc.v.bits = p.width();
      } else {
        acc.v = gates::constant(p, 1, n, Mode::Boolean, p.width());
        acc.is_public_count = true;
      }
    } else if (live) {
      if (acc.kind == AccKind::Ripple) {
        phase2.push_back(store(gates::and_(p, acc.v, gates::expand(p, *live)), &acc.v));
      } else {
        const SVec dead = gates::constant(p, dead_value(p, acc.spec.fn), n, Mode::Boolean, p.width());
        phase2.push_back(store(gates::mux(p, *live, acc.v, dead), &acc.v));
      }
    }
  }
  {
    auto all = run_all(p, std::move(phase2));
    co_await std::move(all);
  }
  co_return accs;
}

// Group flag after merging rows i+d into rows i: m'_i = (m_i & ~b_{i-d}) | (b_i & m_{i+d}).
Task<> merge_flags(Party& p, SVec* m, SVec b, std::size_t d) {
  const std::size_t n = m->size(), k = n - d;
  const SVec nb = gates::not_(p, b);
  const SVec mh = m->slice(d, k);
  auto t1 = gates::and_(p, SVec::concat({&b, &nb}), SVec::concat({&mh, &mh}));
  SVec r1 = co_await std::move(t1);
  const SVec tv = r1.slice(0, k);
  SVec mz = m->slice(0, d);
  mz.append(r1.slice(k, k));  // rows 0..n-1
  auto t2 = gates::or_(p, mz.slice(0, k), tv);
  SVec head = co_await std::move(t2);
  put(mz, 0, head);
  *m = std::move(mz);
}

Task<> merge_dual(Party& p, std::vector<SVec*> accs, SVec b, std::size_t d) {
  const std::size_t n = accs[0]->size(), k = n - d;
  auto tb = gates::b2a_bit(p, std::move(b));
  SVec ba = co_await std::move(tb);
  std::vector<SVec> hi;
  for (SVec* a : accs) hi.push_back(a->slice(d, k));
  std::vector<const SVec*> hp;
  for (auto& h : hi) hp.push_back(&h);
  auto tm = gates::mul(p, repeat(ba, accs.size()), SVec::concat(hp));
  SVec prod = co_await std::move(tm);
  auto parts = split(prod, accs.size());
  for (std::size_t j = 0; j < accs.size(); ++j) {
    SVec s = gates::add(p, accs[j]->slice(0, k), parts[j]);
    s.bits = accs[j]->bits;
    put(*accs[j], 0, s);
  }
}

Task<> merge_ripple(Party& p, std::vector<SVec*> accs, SVec b, std::size_t d) {
  const std::size_t n = accs[0]->size(), k = n - d;
  std::vector<SVec> lo, hi;
  for (SVec* a : accs) {
    lo.push_back(a->slice(0, k));
    hi.push_back(a->slice(d, k));
  }
  std::vector<const SVec*> lp, hp;
  for (std::size_t j = 0; j < accs.size(); ++j) {
    lp.push_back(&lo[j]);
    hp.push_back(&hi[j]);
  }
  SVec lcat = SVec::concat(lp);
  auto tr = gates::rca(p, lcat, SVec::concat(hp));
  SVec s = co_await std::move(tr);
  auto tx = gates::mux(p, repeat(b, accs.size()), s, lcat);
  SVec z = co_await std::move(tx);
  auto parts = split(z, accs.size());
  for (std::size_t j = 0; j < accs.size(); ++j) put(*accs[j], 0, parts[j]);
}

// cl[j]: the hi row holds the better value for aggregate j.
Task<> merge_minmax(Party& p, std::vector<SVec*> accs, std::vector<SVec> cl, SVec b, std::size_t d) {
  const std::size_t n = accs[0]->size(), k = n - d;
  std::vector<const SVec*> cp;
  for (auto& c : cl) cp.push_back(&c);
  auto tc = gates::and_(p, repeat(b, accs.size()), SVec::concat(cp));
  SVec take = co_await std::move(tc);
  std::vector<SVec> lo, hi;
  for (SVec* a : accs) {
    lo.push_back(a->slice(0, k));
    hi.push_back(a->slice(d, k));
  }
  std::vector<const SVec*> lp, hp;
  for (std::size_t j = 0; j < accs.size(); ++j) {
    lp.push_back(&lo[j]);
    hp.push_back(&hi[j]);
  }
  auto tx = gates::mux(p, std::move(take), SVec::concat(hp), SVec::concat(lp));
  SVec z = co_await std::move(tx);
  auto parts = split(z, accs.size());
  for (std::size_t j = 0; j < accs.size(); ++j) put(*accs[j], 0, parts[j]);
}

Task<> or_key(Party& p, SVec* key, SVec b, std::size_t d) {
  const std::size_t n = key->size(), k = n - d;
  auto t = gates::or_(p, key->slice(d, k), gates::expand(p, b));
  SVec z = co_await std::move(t);
  z.bits = key->bits;
  put(*key, d, z);
}

Task<> compare_into(Party& p, SVec x, SVec y, SVec* out) {
  auto t = gates::lt(p, std::move(x), std::move(y));
  *out = co_await std::move(t);
}

Task<> eq_into(Party& p, std::vector<SVec> x, std::vector<SVec> y, SVec* out) {
  auto t = gates::eq_multi(p, std::move(x), std::move(y));
  *out = co_await std::move(t);
}

// One odd-even pass at distance d: compare, merge, then retire the merged rows' keys.
Task<> pass(Party& p, std::vector<SVec>* keys, std::vector<Acc>* accs, SVec* m, std::size_t d) {
  const std::size_t n = m->size(), k = n - d;
  SVec b;
  std::vector<std::size_t> mm;
  for (std::size_t j = 0; j < accs->size(); ++j)
    if ((*accs)[j].kind == AccKind::MinMax) mm.push_back(j);
  std::vector<SVec> cl(mm.size());
  {
    std::vector<Task<>> ts;
    std::vector<SVec> xs, ys;
    for (auto& key : *keys) {
      xs.push_back(key.slice(0, k));
      ys.push_back(key.slice(d, k));
    }
    ts.push_back(eq_into(p, std::move(xs), std::move(ys), &b));
    for (std::size_t j = 0; j < mm.size(); ++j) {
      const Acc& a = (*accs)[mm[j]];
      SVec lo = a.v.slice(0, k), hi = a.v.slice(d, k);
      if (a.spec.fn == AggFn::Min)
        ts.push_back(compare_into(p, std::move(hi), std::move(lo), &cl[j]));
      else
        ts.push_back(compare_into(p, std::move(lo), std::move(hi), &cl[j]));
    }
    auto all = run_all(p, std::move(ts));
    co_await std::move(all);
  }
  {
    std::vector<Task<>> ts;
    ts.push_back(merge_flags(p, m, b, d));
    std::vector<SVec*> dual, ripple, minmax;
    for (auto& a : *accs) {
      if (a.kind == AccKind::Dual) dual.push_back(&a.v);
      if (a.kind == AccKind::Ripple) ripple.push_back(&a.v);
      if (a.kind == AccKind::MinMax) minmax.push_back(&a.v);
    }
    if (!dual.empty()) ts.push_back(merge_dual(p, dual, b, d));
    if (!ripple.empty()) ts.push_back(merge_ripple(p, ripple, b, d));
    if (!minmax.empty()) ts.push_back(merge_minmax(p, minmax, cl, b, d));
    auto all = run_all(p, std::move(ts));
    co_await std::move(all);
  }
  {
    std::vector<Task<>> ts;
    for (auto& key : *keys) ts.push_back(or_key(p, &key, b, d));
    auto all = run_all(p, std::move(ts));
    co_await std::move(all);
  }
}

SharedTable grouped_output(const SharedTable& t, const std::vector<std::string>& keys,
                           const std::vector<SVec>& key_cols, std::vector<Acc>& accs, SVec m) {
  SharedTable out;
  out.rows = t.rows;
  for (std::size_t i = 0; i < keys.size(); ++i) out.add(keys[i], key_cols[i]);
  for (auto& a : accs) out.add(a.spec.out, std::move(a.v));
  out.f = std::move(m);
  return out;
}

Task<std::vector<SVec>> boolean_keys(Party& p, const SharedTable* t, std::vector<std::string> keys) {
  std::vector<SVec> cols;
  for (const auto& k : keys) cols.push_back(t->col(k));
  std::vector<Task<>> ts;
  for (auto& c : cols)
    if (c.mode == Mode::Arithmetic) ts.push_back(a2b_in_place(p, &c));
  auto all = run_all(p, std::move(ts));
  co_await std::move(all);
  co_return cols;
}

// Pairwise reduction to one element; SUM ripples, MIN/MAX compare then select.
Task<> reduce_tree(Party& p, SVec* v, AggFn fn) {
  while (v->size() > 1) {
    const std::size_t k = v->size(), h = k / 2;
    std::vector<std::size_t> ev(h), od(h);
    for (std::size_t j = 0; j < h; ++j) {
      ev[j] = 2 * j;
      od[j] = 2 * j + 1;
    }
    SVec x = v->gather(ev), y = v->gather(od);
    SVec z;
    if (fn == AggFn::Sum) {
      auto t = gates::rca(p, x, y);
      z = co_await std::move(t);
    } else {
      auto tc = fn == AggFn::Min ? gates::lt(p, y, x) : gates::lt(p, x, y);
      SVec c = co_await std::move(tc);
      auto tm = gates::mux(p, std::move(c), y, x);
      z = co_await std::move(tm);
    }
    if (k % 2) z.append(v->slice(k - 1, 1));
    *v = std::move(z);
  }
}

}  // namespace

Task<SharedTable> groupby(Party& p, SharedTable t, std::vector<std::string> keys, std::vector<AggSpec> aggs,
                          bool presorted, bool dual) {
  if (!presorted) {
    SortSpec spec;
    for (const auto& k : keys) spec.keys.push_back({k, false});
    auto ts = sort(p, std::move(t), spec);
    t = co_await std::move(ts);
  }
  const std::size_t n = t.rows;
  std::optional<SVec> live;
  {
    auto tc = collapse(p, t.f, t.d);
    live = co_await std::move(tc);
  }
  auto ti = init_accs(p, &t, live, aggs, dual);
  std::vector<Acc> accs = co_await std::move(ti);
  auto tk = boolean_keys(p, &t, keys);
  std::vector<SVec> key_cols = co_await std::move(tk);
  SVec m = live ? *live : ones(p, n);
  for (std::size_t d = n / 2; d >= 1; d /= 2) {
    auto tp = pass(p, &key_cols, &accs, &m, d);
    co_await std::move(tp);
  }
  // Retired rows carry all-ones keys; restore them so opened keys stay plain.
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const SVec& orig = t.col(keys[i]);
    if (orig.mode == Mode::Boolean) key_cols[i] = orig;
  }
  co_return grouped_output(t, keys, key_cols, accs, std::move(m));
}

Task<SharedTable> groupby_sequential(Party& p, SharedTable t, std::vector<std::string> keys,
                                     std::vector<AggSpec> aggs) {
  for (const auto& a : aggs)
    if (a.fn == AggFn::Min || a.fn == AggFn::Max)
      throw Error(Errc::UnsupportedFeature, "sequential group-by supports COUNT, SUM and AVG");
  {
    SortSpec spec;
    for (const auto& k : keys) spec.keys.push_back({k, false});
    auto ts = sort(p, std::move(t), spec);
    t = co_await std::move(ts);
  }
  const std::size_t n = t.rows;
  std::optional<SVec> live;
  {
    auto tc = collapse(p, t.f, t.d);
    live = co_await std::move(tc);
  }
  auto ti = init_accs(p, &t, live, aggs, true);
  std::vector<Acc> accs = co_await std::move(ti);
  const SVec lv = live ? *live : ones(p, n);
  if (n <= 1) {
    std::vector<SVec> kc;
    for (const auto& k : keys) kc.push_back(t.col(k));
    co_return grouped_output(t, keys, kc, accs, lv);
  }
  // b[i]: row i+1 continues the group of row i
  SVec b;
  {
    std::vector<SVec> xs, ys;
    for (const auto& k : keys) {
      xs.push_back(t.col(k).slice(1, n - 1));
      ys.push_back(t.col(k).slice(0, n - 1));
    }
    auto te = gates::eq_multi(p, std::move(xs), std::move(ys));
    b = co_await std::move(te);
  }
  SVec ba, e;
  {
    std::vector<Task<>> ts;
    ts.push_back(store(gates::b2a_bit(p, b), &ba));
    ts.push_back(store(gates::and_(p, b, gates::not_(p, lv.slice(1, n - 1))), &e));
    auto all = run_all(p, std::move(ts));
    co_await std::move(all);
  }
  // Running totals flow down each group; g tracks whether the group has a live row.
  SVec g = lv;
  for (std::size_t i = 1; i < n; ++i) {
    std::vector<SVec> prev;
    std::vector<const SVec*> pp;
    for (auto& a : accs) prev.push_back(a.v.slice(i - 1, 1));
    for (auto& x : prev) pp.push_back(&x);
    SVec bi = ba.slice(i - 1, 1);
    auto tm = gates::mul(p, repeat(bi, accs.size()), SVec::concat(pp));
    auto tg = gates::and_(p, e.slice(i - 1, 1), g.slice(i - 1, 1));
    SVec prod, carry;
    std::vector<Task<>> ts;
    ts.push_back(store(std::move(tm), &prod));
    ts.push_back(store(std::move(tg), &carry));
    auto all = run_all(p, std::move(ts));
    co_await std::move(all);
    for (std::size_t j = 0; j < accs.size(); ++j) {
      SVec s = gates::add(p, accs[j].v.slice(i, 1), prod.slice(j, 1));
      s.bits = accs[j].v.bits;
      put(accs[j].v, i, s);
    }
    put(g, i, gates::xor_raw(lv.slice(i, 1), carry));
  }
  // The last row of each group reports.
  SVec last = gates::not_(p, b);
  last.append(ones(p, 1));
  auto tf = gates::and_(p, g, last);
  SVec f = co_await std::move(tf);
  std::vector<SVec> kc;
  for (const auto& k : keys) kc.push_back(t.col(k));
  co_return grouped_output(t, keys, kc, accs, std::move(f));
}

Task<SharedTable> global_agg(Party& p, SharedTable t, std::vector<AggSpec> aggs, bool dual) {
  const std::size_t n = t.rows;
  std::optional<SVec> live;
  {
    auto tc = collapse(p, t.f, t.d);
    live = co_await std::move(tc);
  }
  auto ti = init_accs(p, &t, live, aggs, dual);
  std::vector<Acc> accs = co_await std::move(ti);
  SharedTable out;
  out.rows = 1;
  std::vector<Task<>> trees;
  for (auto& a : accs) {
    if (a.is_public_count) {
      a.v = gates::constant(p, n, 1, a.v.mode, p.width());
    } else if (a.kind == AccKind::Dual) {
      SVec s(1, Mode::Arithmetic, p.width());
      for (std::size_t i = 0; i < n; ++i) {
        s.lo[0] += a.v.lo[i];
        s.hi[0] += a.v.hi[i];
      }
      if (n > 0) p.count(n - 1);
      a.v = std::move(s);
    }
  }
  {
    std::vector<Task<>> ts;
    for (auto& a : accs) {
      if (a.is_public_count || a.kind == AccKind::Dual) continue;
      ts.push_back(reduce_tree(p, &a.v, a.kind == AccKind::MinMax ? a.spec.fn : AggFn::Sum));
    }
    auto all = run_all(p, std::move(ts));
    co_await std::move(all);
  }
  for (auto& a : accs) out.add(a.spec.out, std::move(a.v));
  co_return out;
}

}  // namespace secrecy::ops
