#include "secrecy/cost.hpp"

#include <algorithm>
#include <functional>

#include "secrecy/error.hpp"
#include "secrecy/util.hpp"

namespace secrecy {

namespace {

using u64 = std::uint64_t;

u64 clog(u64 x) { return ceil_log2(x); }

CostVector cv(u64 ops, u64 rounds) { return {ops, rounds}; }

// a2b of one arithmetic word: reshare plus ripple-carry.
CostVector a2b_cost(unsigned w) { return cv((1 + w) + (5 * w - 3), w + 1); }

}  // namespace

CostVector cost_primitive(Prim kind, unsigned w) {
  switch (kind) {
    case Prim::Xor: return cv(w, 0);
    case Prim::And:
    case Prim::Or: return cv(w, 1);
    case Prim::Not:
    case Prim::Ltz: return cv(0, 0);
    case Prim::Mux: return cv(3, 1);
    case Prim::Mul: return cv(1, 1);
    case Prim::ArithAdd: return cv(1, 0);
    case Prim::Eq: return cv(2 * w - 1, clog(w));
    case Prim::Ineq: return cv(4 * w - 3, clog(w + 1));
    case Prim::CompareSwap: return cv(4 * w - 3 + 6, clog(w + 1) + 1);
    case Prim::Rca: return cv(5 * w - 3, w);
    case Prim::B2aBit: return cv(8, 2);
    case Prim::B2a: return cv(10 * w - 1, 2);
    case Prim::A2b: return a2b_cost(w);
  }
  return {};
}

CostVector cost_lt_multi(const std::vector<unsigned>& widths) {
  if (widths.empty()) return {};
  u64 total = 0;
  unsigned mx = 0;
  for (unsigned x : widths) {
    total += x;
    mx = std::max(mx, x);
  }
  return cv(4 * total - 3, 1 + clog(mx) + clog(widths.size()));
}

CostVector cost_eq_multi(const std::vector<unsigned>& widths) {
  if (widths.empty()) return {};
  u64 total = 0;
  unsigned mx = 0;
  for (unsigned x : widths) {
    total += x;
    mx = std::max(mx, x);
  }
  return cv(2 * total - 1, clog(mx) + clog(widths.size()));
}

CostVector cost_expr(const Expr& e, const Shape& s, unsigned w) {
  switch (e.kind) {
    case Expr::Kind::Col: {
      const ColInfo* c = s.find(e.name);
      if (c && c->mode == Mode::Arithmetic) return a2b_cost(w);
      return {};
    }
    case Expr::Kind::Const:
      return {};
    case Expr::Kind::Add:
    case Expr::Kind::Sub: {
      CostVector a = cost_expr(*e.a, s, w), b = cost_expr(*e.b, s, w);
      return cv(a.ops + b.ops + 5 * w - 3, std::max(a.rounds, b.rounds) + w);
    }
  }
  return {};
}

CostVector cost_predicate(const Pred& p, const Shape& s, unsigned w) {
  switch (p.kind) {
    case Pred::Kind::True:
    case Pred::Kind::Sign:
      return {};
    case Pred::Kind::Not:
      return cost_predicate(p.kids.front(), s, w);
    case Pred::Kind::Cmp: {
      CostVector a = cost_expr(*p.lhs, s, w), b = cost_expr(*p.rhs, s, w);
      CostVector c = (p.op == CmpOp::Eq || p.op == CmpOp::Ne) ? cost_primitive(Prim::Eq, w)
                                                               : cost_primitive(Prim::Ineq, w);
      return cv(a.ops + b.ops + c.ops, std::max(a.rounds, b.rounds) + c.rounds);
    }
    case Pred::Kind::And:
    case Pred::Kind::Or: {
      std::vector<unsigned> ready;
      u64 ops = 0;
      for (const auto& k : p.kids) {
        CostVector c = cost_predicate(k, s, w);
        ready.push_back(static_cast<unsigned>(c.rounds));
        ops += c.ops;
      }
      return cv(ops + p.kids.size() - 1, greedy_schedule(ready).rounds);
    }
  }
  return {};
}

CostVector cost_predicate(const Pred& p, unsigned w) { return cost_predicate(p, Shape{}, w); }

Pool conjunct_pool(const Pred& p, const Shape& s, std::size_t extra_flags, unsigned w) {
  Pool pool;
  for (const auto& c : p.conjuncts()) {
    CostVector k = cost_predicate(c, s, w);
    pool.ready.push_back(static_cast<unsigned>(k.rounds));
    pool.atom_ops += k.ops;
  }
  for (std::size_t i = 0; i < extra_flags; ++i) pool.ready.push_back(0);
  return pool;
}

namespace {

std::uint64_t pool_rounds(const std::vector<unsigned>& ready) {
  if (ready.empty()) return 0;
  return greedy_schedule(ready).rounds;
}

std::uint64_t combine_ops(const std::vector<unsigned>& ready) { return ready.empty() ? 0 : ready.size() - 1; }

std::vector<unsigned> key_widths(const Shape& s, const std::vector<std::string>& keys) {
  std::vector<unsigned> v;
  for (const auto& k : keys) {
    const ColInfo* c = s.find(k);
    if (!c) throw Error(Errc::UnknownColumn, k);
    v.push_back(c->bits);
  }
  return v;
}

u64 sum(const std::vector<unsigned>& v) {
  u64 t = 0;
  for (auto x : v) t += x;
  return t;
}

void need_pow2(std::size_t n) {
  if (!is_pow2(n)) throw Error(Errc::NonPowerOfTwo, "sort input of " + std::to_string(n) + " rows");
}

std::size_t arith_cols(const Shape& s) {
  return static_cast<std::size_t>(
      std::count_if(s.cols.begin(), s.cols.end(), [](const ColInfo& c) { return c.mode == Mode::Arithmetic; }));
}

// Full sort phase: a2b of arithmetic columns, optional flag collapse and key
// masking, then the network.
CostVector sort_cost(const Shape& s, const std::vector<std::string>& keys, bool flag_unit, bool mask_keys,
                     unsigned w) {
  const std::size_t n = s.rows;
  CostVector c;
  if (n <= 1) return c;
  need_pow2(n);
  if (std::size_t a = arith_cols(s)) c += cv(n * a * a2b_cost(w).ops, a2b_cost(w).rounds);
  const bool collapse = (flag_unit || mask_keys) && s.flag_count() == 2;
  if (collapse) c += cv(n, 1);
  auto kw = key_widths(s, keys);
  if (mask_keys && s.flag_count() > 0) c += cv(n * sum(kw), 1);
  std::vector<unsigned> units;
  if (flag_unit && s.flag_count() > 0) units.push_back(1);
  units.insert(units.end(), kw.begin(), kw.end());
  const std::size_t flags_moved = (flag_unit || mask_keys) ? (s.flag_count() > 0 ? 1 : 0) : s.flag_count();
  c += cost_sort_network(n, units, s.cols.size() + flags_moved);
  return c;
}

struct AggPlan {
  std::size_t dual = 0;     // arithmetic accumulators
  std::size_t ripple = 0;   // boolean COUNT/SUM accumulators
  std::size_t minmax = 0;
  bool dual_needs_live = false;
};

// Expands AVG into SUM and COUNT.
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

// Initialization of grouped / global accumulators from the live bit, in two
// lockstep phases: conversions (b2a of the live bit and of boolean SUM
// sources, a2b of arithmetic sources of boolean aggregates), then the
// products with the live bit.
CostVector agg_init_cost(const std::vector<AggSpec>& aggs, const Shape& s, bool dual, bool live_shared,
                         unsigned w) {
  const std::size_t n = s.rows;
  bool la = false, xa = false, xb = false, second = false;
  u64 ops = 0;
  for (const auto& a : flatten(aggs)) {
    const bool arith_src = a.fn != AggFn::Count && s.find(a.col)->mode == Mode::Arithmetic;
    const bool additive = a.fn == AggFn::Count || a.fn == AggFn::Sum;
    if (dual && additive) {
      if (live_shared) la = true;
      if (a.fn == AggFn::Sum) {
        if (!arith_src) {
          xa = true;
          ops += n * (10 * w - 1);
        }
        if (live_shared) {
          second = true;
          ops += n;
        }
      }
    } else if (a.fn != AggFn::Count) {
      if (arith_src) {
        xb = true;
        ops += n * a2b_cost(w).ops;
      }
      if (live_shared) {
        second = true;
        ops += a.fn == AggFn::Sum ? n * w : 3 * n;
      }
    }
  }
  if (la) ops += 8 * n;
  u64 first = 0;
  if (la || xa) first = 2;
  if (xb) first = std::max<u64>(first, a2b_cost(w).rounds);
  return cv(ops, first + (second ? 1 : 0));
}

CostVector oddeven_passes(std::size_t n, const std::vector<unsigned>& kw, const std::vector<AggSpec>& aggs,
                          bool dual, unsigned w) {
  CostVector c;
  if (n <= 1) return c;
  std::size_t n_dual = 0, n_ripple = 0, n_minmax = 0;
  for (const auto& a : flatten(aggs)) {
    if (a.fn == AggFn::Min || a.fn == AggFn::Max)
      ++n_minmax;
    else if (dual)
      ++n_dual;
    else
      ++n_ripple;
  }
  const CostVector eqk = cost_eq_multi(kw);
  const CostVector lt = cost_primitive(Prim::Ineq, w);
  const u64 a_rounds = std::max<u64>(eqk.rounds, n_minmax ? lt.rounds : 0);
  u64 b_rounds = 2;
  if (n_dual) b_rounds = std::max<u64>(b_rounds, 3);
  if (n_ripple) b_rounds = std::max<u64>(b_rounds, w + 1);
  if (n_minmax) b_rounds = std::max<u64>(b_rounds, 2);
  u64 per_pair = eqk.ops + n_minmax * lt.ops;  // A
  per_pair += 3;                                // live tracking
  if (n_dual) per_pair += 8 + 2 * n_dual;
  per_pair += n_ripple * (5 * w - 3 + 3);
  per_pair += n_minmax * 4;
  per_pair += sum(kw);  // C
  for (std::size_t d = n / 2; d >= 1; d /= 2) {
    c += cv((n - d) * per_pair, a_rounds + b_rounds + 1);
  }
  return c;
}

Shape project_keys(const Shape& s, const std::vector<std::string>& keys) {
  Shape p = s;
  p.cols.clear();
  for (const auto& k : keys) {
    const ColInfo* c = s.find(k);
    if (!c) throw Error(Errc::UnknownColumn, k);
    p.cols.push_back(*c);
  }
  return p;
}

CostVector eq_pass(std::size_t n, const std::vector<unsigned>& kw) {
  if (n <= 1) return {};
  CostVector e = cost_eq_multi(kw);
  return cv((n - 1) * e.ops, e.rounds);
}

CostVector join_cost(const PlanNode& node, const Shape& l, const Shape& r, const CostParams& prm) {
  const unsigned w = prm.width;
  Shape both = l;
  for (const auto& c : r.cols) both.cols.push_back(c);
  const u64 n = l.rows, m = r.rows, pairs = n * m;
  Pool th = conjunct_pool(node.pred, both, 0, w);
  Pool lp = conjunct_pool(node.left_pred, l, 0, w);
  Pool rp = conjunct_pool(node.right_pred, r, 0, w);
  const std::size_t flags = l.flag_count() + r.flag_count();
  std::vector<unsigned> first = th.ready, later = th.ready;
  first.insert(first.end(), lp.ready.begin(), lp.ready.end());
  first.insert(first.end(), rp.ready.begin(), rp.ready.end());
  later.insert(later.end(), lp.ready.size() + rp.ready.size(), 0);
  first.insert(first.end(), flags, 0);
  later.insert(later.end(), flags, 0);
  const u64 b = std::max<std::size_t>(prm.batch_rows, 1);
  const u64 chunks = pairs == 0 ? 0 : (pairs + b - 1) / b;
  CostVector c;
  c.ops = pairs * th.atom_ops + n * lp.atom_ops + m * rp.atom_ops + pairs * combine_ops(first);
  c.rounds = chunks == 0 ? 0 : pool_rounds(first) + (chunks - 1) * pool_rounds(later);
  return c;
}

CostVector semijoin_cost(const PlanNode& node, const Shape& l, const Shape& r, const CostParams& prm) {
  const unsigned w = prm.width;
  Shape both = l;
  for (const auto& c : r.cols) both.cols.push_back(c);
  const u64 n = l.rows, m = r.rows, pairs = n * m;
  Pool th = conjunct_pool(node.pred, both, 0, w);
  Pool lp = conjunct_pool(node.left_pred, l, 0, w);
  Pool rp = conjunct_pool(node.right_pred, r, 0, w);
  auto chunk_rounds = [&](bool first) {
    std::vector<unsigned> pair = th.ready;
    for (unsigned x : rp.ready) pair.push_back(first ? x : 0);
    pair.insert(pair.end(), r.flag_count(), 0);
    const u64 t1 = pool_rounds(pair);
    const u64 t_or = t1 + std::max<u64>(clog(m), node.partial ? 2 : 0);
    std::vector<unsigned> left{static_cast<unsigned>(t_or)};
    for (unsigned x : lp.ready) left.push_back(first ? x : 0);
    left.insert(left.end(), l.flag_count(), 0);
    return pool_rounds(left);
  };
  std::vector<unsigned> pair0 = th.ready;
  pair0.insert(pair0.end(), rp.ready.begin(), rp.ready.end());
  pair0.insert(pair0.end(), r.flag_count(), 0);
  const std::size_t left_operands = 1 + lp.ready.size() + l.flag_count();
  const u64 per_chunk_rows = std::max<u64>(1, std::max<std::size_t>(prm.batch_rows, 1) / std::max<u64>(m, 1));
  const u64 chunks = n == 0 ? 0 : (n + per_chunk_rows - 1) / per_chunk_rows;
  CostVector c;
  c.ops = pairs * th.atom_ops + n * lp.atom_ops + m * rp.atom_ops + pairs * combine_ops(pair0) + n * (m - 1) +
          n * (left_operands - 1);
  if (node.partial) c.ops += 8 * pairs + n * (m - 1);
  c.rounds = chunks == 0 ? 0 : chunk_rounds(true) + (chunks - 1) * chunk_rounds(false);
  return c;
}

CostVector groupby_cost(const PlanNode& node, const Shape& in, const CostParams& prm) {
  const unsigned w = prm.width;
  CostVector c;
  Shape s = in;
  if (!node.presorted) {
    c += sort_cost(s, node.keys, false, false, w);
    if (s.rows > 1)
      for (auto& col : s.cols) col.mode = Mode::Boolean;
  }
  const std::size_t n = s.rows;
  if (s.flag_count() == 2) c += cv(n, 1);
  c += agg_init_cost(node.aggs, s, node.dual, s.flag_count() > 0, w);
  c += oddeven_passes(n, key_widths(s, node.keys), node.aggs, node.dual, w);
  return c;
}

CostVector distinct_cost(const PlanNode& node, const Shape& in, const CostParams& prm) {
  const unsigned w = prm.width;
  const Shape s = project_keys(in, node.keys);
  const auto kw = key_widths(s, node.keys);
  const std::size_t n = s.rows;
  CostVector c;
  switch (node.mode) {
    case DistinctMode::Sequential: {
      c += sort_cost(s, node.keys, false, false, w);
      CostVector eq = eq_pass(n, kw);
      if (s.flag_count() == 0) return c + eq;
      c.ops += eq.ops;
      u64 first = eq.rounds;
      if (s.flag_count() == 2) {
        c.ops += n;
        first = std::max<u64>(first, 1);
      }
      c.rounds += first;
      if (n >= 2) c += cv(2 * (n - 1), 1);
      if (n >= 3) c += cv(n - 2, n - 2);
      c += cv(n, 1);
      return c;
    }
    case DistinctMode::Fused:
      c += sort_cost(s, node.keys, false, s.flag_count() > 0, w);
      return c + eq_pass(n, kw);
    case DistinctMode::Uniform:
      return eq_pass(n, kw);
    case DistinctMode::OddEven:
      if (s.flag_count() == 2) c += cv(n, 1);
      return c + oddeven_passes(n, kw, {}, false, w);
  }
  return c;
}

CostVector adjacent_cost(const PlanNode& node, const Shape& s, const CostParams& prm) {
  const std::size_t n = s.rows;
  if (n <= 1) return {};
  Pool pool = conjunct_pool(node.pred, s, 2 * s.flag_count(), prm.width);
  return cv((n - 1) * (pool.atom_ops + combine_ops(pool.ready)), pool_rounds(pool.ready));
}

CostVector global_agg_cost(const PlanNode& node, const Shape& s, const CostParams& prm) {
  const unsigned w = prm.width;
  const std::size_t n = s.rows;
  const bool live_shared = s.flag_count() > 0;
  CostVector c;
  if (s.flag_count() == 2) c += cv(n, 1);
  c += agg_init_cost(node.aggs, s, node.dual, live_shared, w);
  const CostVector lt = cost_primitive(Prim::Ineq, w);
  u64 tree = 0;
  for (const auto& a : flatten(node.aggs)) {
    const bool additive = a.fn == AggFn::Count || a.fn == AggFn::Sum;
    if (a.fn == AggFn::Count && !live_shared) continue;  // public row count
    if (node.dual && additive) {
      c.ops += n - 1;
    } else if (additive) {
      c.ops += (n - 1) * (5 * w - 3);
      tree = std::max<u64>(tree, clog(n) * w);
    } else {
      c.ops += (n - 1) * (lt.ops + 3);
      tree = std::max<u64>(tree, clog(n) * (lt.rounds + 1));
    }
  }
  c.rounds += tree;
  return c;
}

CostVector open_cost(const Shape& s, unsigned w) {
  const std::size_t n = s.rows;
  CostVector c;
  if (n == 0) return c;
  if (s.flag_count() == 2) c += cv(n, 1);
  if (s.flag_count() > 0) {
    const std::size_t a = arith_cols(s);
    const std::size_t b = s.cols.size() - a;
    u64 r = 0;
    if (b) {
      c.ops += n * w * b;
      r = 1;
    }
    if (a) {
      c.ops += 8 * n + 2 * n * a;
      r = 3;
    }
    c.rounds += r;
  }
  c.rounds += 1;
  return c;
}

}  // namespace

CostVector cost_sort_network(std::size_t n, const std::vector<unsigned>& unit_widths, std::size_t moved) {
  if (n <= 1) return {};
  need_pow2(n);
  const u64 l = clog(n);
  const u64 stages = l * (l + 1) / 2;
  const CostVector cmp = cost_lt_multi(unit_widths);
  return cv(stages * (n / 2) * (cmp.ops + 6 * moved), stages * (cmp.rounds + 1));
}

CostVector cost_operator(const PlanNode& n, const std::vector<Shape>& in, const CostParams& prm) {
  const unsigned w = prm.width;
  switch (n.op) {
    case OpKind::Scan:
    case OpKind::Project:
      return {};
    case OpKind::Select: {
      if (n.pred.is_true()) return {};
      const Shape& s = in[0];
      Pool pool = conjunct_pool(n.pred, s, s.shared_flag ? 1 : 0, w);
      return cv(s.rows * (pool.atom_ops + combine_ops(pool.ready)), pool_rounds(pool.ready));
    }
    case OpKind::Join:
      return join_cost(n, in[0], in[1], prm);
    case OpKind::SemiJoin:
      return semijoin_cost(n, in[0], in[1], prm);
    case OpKind::Sort: {
      std::vector<std::string> keys;
      for (const auto& k : n.sort_keys) keys.push_back(k.col);
      return sort_cost(in[0], keys, n.flag_unit, n.mask_keys, w);
    }
    case OpKind::GroupBy:
      return groupby_cost(n, in[0], prm);
    case OpKind::Distinct:
      return distinct_cost(n, in[0], prm);
    case OpKind::Adjacent:
      return adjacent_cost(n, in[0], prm);
    case OpKind::GlobalAgg:
      return global_agg_cost(n, in[0], prm);
    case OpKind::Shuffle: {
      Shape s = in[0];
      s.cols.push_back({"#shuffle", Mode::Boolean, kWordBits});
      return sort_cost(s, {"#shuffle"}, false, false, w);
    }
    case OpKind::Open: {
      Shape s = in[0];
      s.cols.clear();
      for (const auto& c : n.cols) s.cols.push_back(*in[0].find(c));
      return open_cost(s, w);
    }
  }
  return {};
}

CostVector cost_composition(CompOp up, CompOp down, std::size_t n) {
  auto is = [](CompOp x, std::initializer_list<CompOp> set) {
    return std::find(set.begin(), set.end(), x) != set.end();
  };
  const u64 nn = n;
  if (up == CompOp::OrderBy || down == CompOp::OrderBy) return {};
  const auto rel = {CompOp::Select, CompOp::Join, CompOp::SemiJoin};
  if (down == CompOp::Distinct && is(up, {CompOp::Select, CompOp::Join, CompOp::SemiJoin, CompOp::GroupBy, CompOp::Distinct}))
    return cv(nn, nn);
  if (is(down, rel) && is(up, {CompOp::Select, CompOp::Join, CompOp::SemiJoin, CompOp::Distinct, CompOp::GroupBy}))
    return cv(nn, 1);
  if (down == CompOp::GroupBy && is(up, {CompOp::Select, CompOp::Join, CompOp::SemiJoin, CompOp::GroupBy, CompOp::Distinct}))
    return cv(2 * nn, 2);
  throw Error(Errc::UnknownPair, "no composition rule for this operator pair");
}

namespace {

Shape cost_rec(const PlanNode& n, int depth, const Catalog& cat, const CostParams& prm, PlanCost& out) {
  std::vector<Shape> in;
  for (const auto& k : n.kids) in.push_back(cost_rec(*k, depth + 1, cat, prm, out));
  Shape s = infer_node_shape(n, in, cat);
  NodeCost nc;
  nc.node = &n;
  nc.depth = depth;
  nc.cost = cost_operator(n, in, prm);
  if (n.op != OpKind::Scan) {
    std::vector<Shape> plain = in;
    for (auto& x : plain) x.shared_flag = x.shared_valid = false;
    CostVector bare = cost_operator(n, plain, prm);
    nc.composition_rounds = nc.cost.rounds > bare.rounds ? nc.cost.rounds - bare.rounds : 0;
  }
  out.total += nc.cost;
  nc.cumulative = out.total;
  nc.shape = s;
  out.nodes.push_back(std::move(nc));
  return s;
}

}  // namespace

PlanCost cost_plan(const PlanNode& plan, const Catalog& cat, const CostParams& prm) {
  PlanCost pc;
  cost_rec(plan, 0, cat, prm, pc);
  pc.scalar = prm.weigh(pc.total);
  return pc;
}

}  // namespace secrecy
