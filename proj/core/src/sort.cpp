#include <algorithm>

#include "eval.hpp"
#include "secrecy/error.hpp"
#include "secrecy/operators.hpp"
#include "secrecy/util.hpp"

namespace secrecy::ops {

using namespace detail;

namespace {

// One compare-exchange stage over the given pairs. Row lo[k] must precede
// row hi[k] in ascending order when asc[k], in descending order otherwise.
Task<> exchange_stage(Party& p, SharedTable* t, std::vector<int> key_cols, bool flag_unit,
                      std::vector<gates::Unit> units, std::vector<std::size_t> lo, std::vector<std::size_t> hi,
                      std::vector<bool> asc) {
  const std::size_t np = lo.size();
  // A before B means swap.
  std::vector<std::size_t> a_idx(np), b_idx(np);
  for (std::size_t k = 0; k < np; ++k) {
    a_idx[k] = asc[k] ? hi[k] : lo[k];
    b_idx[k] = asc[k] ? lo[k] : hi[k];
  }
  std::vector<SVec> xs, ys;
  if (flag_unit) {
    xs.push_back(t->f->gather(a_idx));
    ys.push_back(t->f->gather(b_idx));
  }
  for (int c : key_cols) {
    xs.push_back(t->cols[static_cast<std::size_t>(c)].gather(a_idx));
    ys.push_back(t->cols[static_cast<std::size_t>(c)].gather(b_idx));
  }
  auto tc = gates::lt_multi(p, std::move(xs), std::move(ys), std::move(units));
  SVec c = co_await std::move(tc);

  std::vector<SVec*> moved;
  for (auto& col : t->cols) moved.push_back(&col);
  if (t->f) moved.push_back(&*t->f);
  if (t->d) moved.push_back(&*t->d);

  std::vector<SVec> lhs, rhs, xv, yv;
  const SVec wide = gates::expand(p, c);
  const SVec narrow = gates::bit_at(c, 0);
  for (SVec* col : moved) {
    xv.push_back(col->gather(lo));
    yv.push_back(col->gather(hi));
    rhs.push_back(gates::xor_raw(xv.back(), yv.back()));
    lhs.push_back(col->bits == 1 ? narrow : wide);
  }
  std::vector<const SVec*> lp, rp;
  for (std::size_t i = 0; i < moved.size(); ++i) {
    lp.push_back(&lhs[i]);
    rp.push_back(&rhs[i]);
  }
  auto ta = gates::and_raw(p, SVec::concat(lp), SVec::concat(rp));
  SVec prod = co_await std::move(ta);
  p.count(6 * moved.size() * np, 4 * moved.size() * np);
  auto parts = split(prod, moved.size());
  for (std::size_t i = 0; i < moved.size(); ++i) {
    SVec& col = *moved[i];
    parts[i].bits = col.bits;
    parts[i].mode = Mode::Boolean;
    SVec tt = gates::masked(p, parts[i]);
    SVec nx = gates::xor_raw(xv[i], tt), ny = gates::xor_raw(yv[i], tt);
    for (std::size_t k = 0; k < np; ++k) {
      col.lo[lo[k]] = nx.lo[k];
      col.hi[lo[k]] = nx.hi[k];
      col.lo[hi[k]] = ny.lo[k];
      col.hi[hi[k]] = ny.hi[k];
    }
  }
}

Task<> open_into(Party& p, SVec x, std::vector<Word>* out) {
  auto t = gates::open(p, std::move(x));
  *out = co_await std::move(t);
}

Task<> store_opt(Task<std::optional<SVec>> t, std::optional<SVec>* out) {
  *out = co_await std::move(t);
}

// Row i is first in its key run (row 0 always).
Task<SVec> first_of_run(Party& p, SharedTable t, std::vector<std::string> keys) {
  const std::size_t n = t.rows;
  if (n <= 1) co_return ones(p, n);
  std::vector<SVec> xs, ys;
  for (const auto& k : keys) {
    xs.push_back(t.col(k).slice(1, n - 1));
    ys.push_back(t.col(k).slice(0, n - 1));
  }
  auto te = gates::eq_multi(p, std::move(xs), std::move(ys));
  SVec h = co_await std::move(te);
  SVec d = ones(p, 1);
  d.append(gates::not_(p, h));
  co_return d;
}

}  // namespace

Task<SharedTable> sort(Party& p, SharedTable t, SortSpec spec) {
  const std::size_t n = t.rows;
  if (n > 1) {
    if (!is_pow2(n)) throw Error(Errc::NonPowerOfTwo, "sort input of " + std::to_string(n) + " rows");
    {
      std::vector<Task<>> ts;
      for (auto& col : t.cols)
        if (col.mode == Mode::Arithmetic) ts.push_back(store(gates::a2b(p, col), &col));
      if (!ts.empty()) {
        auto all = run_all(p, std::move(ts));
        co_await std::move(all);
      }
    }
    if (spec.flag_unit || spec.mask_keys) {
      auto tc = collapse(p, std::move(t.f), std::move(t.d));
      t.f = co_await std::move(tc);
      t.d.reset();
    }
    std::vector<int> key_cols;
    for (const auto& k : spec.keys) {
      const int i = t.index(k.col);
      if (i < 0) throw Error(Errc::UnknownColumn, k.col);
      key_cols.push_back(i);
    }
    if (spec.mask_keys && t.f) {
      // dead keys become all ones: k | ~live
      std::vector<SVec> nk, lv;
      const SVec live = gates::expand(p, *t.f);
      for (int c : key_cols) {
        nk.push_back(gates::not_(p, t.cols[static_cast<std::size_t>(c)]));
        lv.push_back(live);
      }
      std::vector<const SVec*> a, b;
      for (std::size_t i = 0; i < nk.size(); ++i) {
        a.push_back(&nk[i]);
        b.push_back(&lv[i]);
      }
      auto tm = gates::and_(p, SVec::concat(a), SVec::concat(b));
      SVec keep = co_await std::move(tm);
      auto parts = split(keep, key_cols.size());
      for (std::size_t i = 0; i < key_cols.size(); ++i)
        t.cols[static_cast<std::size_t>(key_cols[i])] = gates::not_(p, parts[i]);
    }
    const bool flag_unit = spec.flag_unit && t.f.has_value();
    std::vector<gates::Unit> units;
    if (flag_unit) units.push_back({true, false});
    for (const auto& k : spec.keys) units.push_back({k.desc, true});
    for (std::size_t k = 2; k <= n; k <<= 1)
      for (std::size_t j = k >> 1; j > 0; j >>= 1) {
        std::vector<std::size_t> lo, hi;
        std::vector<bool> asc;
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t l = i ^ j;
          if (l > i) {
            lo.push_back(i);
            hi.push_back(l);
            asc.push_back((i & k) == 0);
          }
        }
        auto st = exchange_stage(p, &t, key_cols, flag_unit, units, std::move(lo), std::move(hi), std::move(asc));
        co_await std::move(st);
      }
  }
  if (spec.limit && *spec.limit < t.rows) {
    const std::size_t k = *spec.limit;
    for (auto& c : t.cols) c = c.slice(0, k);
    if (t.f) t.f = t.f->slice(0, k);
    if (t.d) t.d = t.d->slice(0, k);
    t.rows = k;
  }
  co_return t;
}

Task<SharedTable> shuffle(Party& p, SharedTable t) {
  if (t.rows <= 1) co_return t;
  const std::string key = "#shuffle";
  t.add(key, gates::random(p, t.rows, Mode::Boolean, p.width()));
  SortSpec spec;
  spec.keys = {{key, false}};
  auto ts = sort(p, std::move(t), spec);
  SharedTable s = co_await std::move(ts);
  const int i = s.index(key);
  s.names.erase(s.names.begin() + i);
  s.cols.erase(s.cols.begin() + i);
  co_return s;
}

Task<SharedTable> distinct(Party& p, SharedTable t, std::vector<std::string> keys, DistinctMode mode) {
  SharedTable s = project(std::move(t), keys);
  const std::size_t n = s.rows;
  std::vector<SortKey> sk;
  for (const auto& k : keys) sk.push_back({k, false});
  switch (mode) {
    case DistinctMode::Sequential: {
      auto tsort = sort(p, std::move(s), SortSpec{sk, false, false, {}});
      s = co_await std::move(tsort);
      if (!s.f && !s.d) {
        auto tf = first_of_run(p, s, keys);
        s.d = co_await std::move(tf);
        co_return s;
      }
      // h[i]: row i continues the run of row i-1
      SVec first;
      std::optional<SVec> live;
      {
        std::vector<Task<>> ts;
        ts.push_back(store(first_of_run(p, s, keys), &first));
        ts.push_back(store_opt(collapse(p, s.f, s.d), &live));
        auto all = run_all(p, std::move(ts));
        co_await std::move(all);
      }
      const SVec h = gates::not_(p, first);
      // c[i]: some live row precedes row i within its run.
      // c[i+1] = h[i+1] & (live[i] | c[i]) = a[i] ^ (e[i] & c[i]) with
      // a[i] = h[i+1] & live[i] and e[i] = h[i+1] & ~live[i].
      SVec c(n, Mode::Boolean, 1);
      if (n >= 2) {
        SVec hh = h.slice(1, n - 1);
        SVec lv = live->slice(0, n - 1);
        SVec nlv = gates::not_(p, lv);
        auto tae = gates::and_(p, SVec::concat({&hh, &hh}), SVec::concat({&lv, &nlv}));
        SVec ae = co_await std::move(tae);
        SVec a = ae.slice(0, n - 1), e = ae.slice(n - 1, n - 1);
        c.set(1, a.at(0));
        for (std::size_t i = 1; i + 1 < n; ++i) {
          auto tstep = gates::and_(p, e.slice(i, 1), c.slice(i, 1));
          SVec prod = co_await std::move(tstep);
          SVec next = gates::xor_raw(a.slice(i, 1), prod);
          c.set(i + 1, next.at(0));
        }
      }
      auto td = gates::and_(p, *live, gates::not_(p, c));
      SVec d = co_await std::move(td);
      s.f = std::move(live);
      s.d = std::move(d);
      co_return s;
    }
    case DistinctMode::Fused: {
      const bool flagged = s.f || s.d;
      auto tsort = sort(p, std::move(s), SortSpec{sk, false, flagged, {}});
      s = co_await std::move(tsort);
      auto tf = first_of_run(p, s, keys);
      s.d = co_await std::move(tf);
      co_return s;
    }
    case DistinctMode::Uniform: {
      if (s.d) throw Error(Errc::GuardFailed, "uniform distinct over a table with a validity column");
      auto tf = first_of_run(p, s, keys);
      s.d = co_await std::move(tf);
      co_return s;
    }
    case DistinctMode::OddEven: {
      auto tg = groupby(p, std::move(s), keys, {}, true, false);
      SharedTable g = co_await std::move(tg);
      co_return g;
    }
  }
  co_return s;
}

Task<SharedTable> mask(Party& p, SharedTable t) {
  auto tc = collapse(p, std::move(t.f), std::move(t.d));
  std::optional<SVec> live = co_await std::move(tc);
  t.d.reset();
  if (!live) co_return t;
  const std::size_t n = t.rows;
  std::vector<std::size_t> bcols, acols;
  for (std::size_t i = 0; i < t.cols.size(); ++i)
    (t.cols[i].mode == Mode::Arithmetic ? acols : bcols).push_back(i);
  SVec bres, ares, la;
  std::vector<Task<>> ts;
  std::vector<SVec> nb, lv;
  if (!bcols.empty()) {
    const SVec wide = gates::expand(p, *live);
    for (auto i : bcols) {
      nb.push_back(gates::not_(p, t.cols[i]));
      lv.push_back(wide);
    }
    std::vector<const SVec*> a, b;
    for (std::size_t i = 0; i < nb.size(); ++i) {
      a.push_back(&nb[i]);
      b.push_back(&lv[i]);
    }
    ts.push_back(store(gates::and_(p, SVec::concat(a), SVec::concat(b)), &bres));
  }
  if (!acols.empty()) ts.push_back(store(gates::b2a_bit(p, *live), &la));
  {
    auto all = run_all(p, std::move(ts));
    co_await std::move(all);
  }
  if (!bcols.empty()) {
    auto parts = split(bres, bcols.size());
    for (std::size_t k = 0; k < bcols.size(); ++k) t.cols[bcols[k]] = gates::not_(p, parts[k]);
  }
  if (!acols.empty()) {
    // x * live + live - 1 opens to x or to the all-ones sentinel
    std::vector<SVec> lrep;
    std::vector<const SVec*> a, b;
    for (std::size_t k = 0; k < acols.size(); ++k) lrep.push_back(la);
    for (std::size_t k = 0; k < acols.size(); ++k) {
      a.push_back(&lrep[k]);
      b.push_back(&t.cols[acols[k]]);
    }
    auto tm = gates::mul(p, SVec::concat(a), SVec::concat(b));
    SVec prod = co_await std::move(tm);
    auto parts = split(prod, acols.size());
    const SVec lm1 = gates::add_public(p, la, ~Word{0});
    for (std::size_t k = 0; k < acols.size(); ++k) {
      SVec v = gates::add(p, parts[k], lm1);
      v.bits = p.width();
      t.cols[acols[k]] = std::move(v);
    }
  }
  t.f = std::move(live);
  (void)n;
  co_return t;
}

Task<OpenedTable> open(Party& p, SharedTable t, std::vector<std::string> cols) {
  SharedTable s = project(std::move(t), cols);
  auto tm = mask(p, std::move(s));
  s = co_await std::move(tm);
  const std::size_t n = s.rows;
  std::vector<std::vector<Word>> values(s.cols.size());
  std::vector<Word> live;
  {
    std::vector<Task<>> ts;
    for (std::size_t i = 0; i < s.cols.size(); ++i) ts.push_back(open_into(p, s.cols[i], &values[i]));
    if (s.f) ts.push_back(open_into(p, *s.f, &live));
    auto all = run_all(p, std::move(ts));
    co_await std::move(all);
  }
  OpenedTable out;
  out.names = cols;
  for (std::size_t r = 0; r < n; ++r) {
    if (s.f && (live[r] & 1) == 0) continue;
    std::vector<Word> row;
    for (auto& v : values) row.push_back(v[r]);
    out.rows.push_back(std::move(row));
  }
  co_return out;
}

}  // namespace secrecy::ops
