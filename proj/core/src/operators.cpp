#include "secrecy/operators.hpp"

#include <algorithm>

#include "eval.hpp"
#include "secrecy/cost.hpp"
#include "secrecy/error.hpp"
#include "secrecy/util.hpp"

namespace secrecy {

int SharedTable::index(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}

const SVec& SharedTable::col(const std::string& name) const {
  const int i = index(name);
  if (i < 0) throw Error(Errc::UnknownColumn, name);
  return cols[static_cast<std::size_t>(i)];
}

void SharedTable::add(std::string name, SVec c) {
  names.push_back(std::move(name));
  cols.push_back(std::move(c));
}

Shape SharedTable::shape() const {
  Shape s;
  s.rows = rows;
  for (std::size_t i = 0; i < names.size(); ++i) s.cols.push_back({names[i], cols[i].mode, cols[i].bits});
  s.shared_flag = f.has_value();
  s.shared_valid = d.has_value();
  return s;
}

namespace detail {

Task<> store(Task<SVec> t, SVec* out) { *out = co_await std::move(t); }

Task<SVec> ready(SVec v) { co_return v; }

Task<> run_all(Party& p, std::vector<Task<>> tasks) { co_await AllOf(p.scheduler(), tasks); }

SVec ones(const Party& p, std::size_t n) { return gates::constant(p, 1, n, Mode::Boolean, 1); }

SVec zeros(const Party&, std::size_t n, unsigned bits) { return SVec(n, Mode::Boolean, bits); }

CtxPtr table_ctx(const SharedTable& t) {
  auto owned = std::make_shared<SharedTable>(t);
  auto ctx = std::make_shared<EvalCtx>();
  ctx->shape = t.shape();
  ctx->n = t.rows;
  ctx->column = [owned](const std::string& name, int) { return owned->col(name); };
  return ctx;
}

Task<SVec> eval_expr(Party& p, CtxPtr ctx, ExprPtr e) {
  if (e->kind == Expr::Kind::Col) {
    SVec c = ctx->column(e->name, e->side);
    if (c.mode == Mode::Arithmetic) {
      auto t = gates::a2b(p, std::move(c));
      SVec b = co_await std::move(t);
      co_return b;
    }
    co_return c;
  }
  if (e->kind == Expr::Kind::Const) co_return gates::constant(p, e->value & p.mask(), ctx->n, Mode::Boolean, p.width());
  SVec a, b;
  std::vector<Task<>> ts;
  ts.push_back(store(eval_expr(p, ctx, e->a), &a));
  ts.push_back(store(eval_expr(p, ctx, e->b), &b));
  auto all = run_all(p, std::move(ts));
  co_await std::move(all);
  auto t = e->kind == Expr::Kind::Add ? gates::rca(p, std::move(a), std::move(b))
                                      : gates::rca_sub(p, std::move(a), std::move(b));
  SVec r = co_await std::move(t);
  co_return r;
}

Task<SVec> eval_pred(Party& p, CtxPtr ctx, Pred pred) {
  switch (pred.kind) {
    case Pred::Kind::True:
      co_return ones(p, ctx->n);
    case Pred::Kind::Sign: {
      auto t = eval_expr(p, ctx, pred.lhs);
      SVec x = co_await std::move(t);
      co_return gates::ltz(p, x);
    }
    case Pred::Kind::Not: {
      auto t = eval_pred(p, ctx, pred.kids.front());
      SVec x = co_await std::move(t);
      co_return gates::not_(p, x);
    }
    case Pred::Kind::And:
    case Pred::Kind::Or: {
      std::vector<Operand> ops;
      for (const auto& k : pred.kids) ops.push_back(pred_operand(p, ctx, k));
      auto t = combine(p, std::move(ops), pred.kind == Pred::Kind::Or, ctx->n);
      SVec r = co_await std::move(t);
      co_return r;
    }
    case Pred::Kind::Cmp:
      break;
  }
  SVec l, r;
  {
    std::vector<Task<>> ts;
    ts.push_back(store(eval_expr(p, ctx, pred.lhs), &l));
    ts.push_back(store(eval_expr(p, ctx, pred.rhs), &r));
    auto all = run_all(p, std::move(ts));
    co_await std::move(all);
  }
  const CmpOp op = pred.op;
  if (op == CmpOp::Eq || op == CmpOp::Ne) {
    auto t = gates::eq(p, std::move(l), std::move(r));
    SVec b = co_await std::move(t);
    co_return op == CmpOp::Eq ? b : gates::not_(p, b);
  }
  // Lt: l<r; Gt: r<l; Le: !(r<l); Ge: !(l<r)
  const bool swap = op == CmpOp::Gt || op == CmpOp::Le;
  const bool neg = op == CmpOp::Le || op == CmpOp::Ge;
  auto t = swap ? gates::lt(p, std::move(r), std::move(l)) : gates::lt(p, std::move(l), std::move(r));
  SVec b = co_await std::move(t);
  co_return neg ? gates::not_(p, b) : b;
}

Operand value_operand(SVec v) {
  auto held = std::make_shared<SVec>(std::move(v));
  return {[held] { return ready(*held); }, 0};
}

Operand pred_operand(Party& p, CtxPtr ctx, const Pred& pred) {
  const unsigned r = static_cast<unsigned>(cost_predicate(pred, ctx->shape, p.width()).rounds);
  Party* pp = &p;
  return {[pp, ctx, pred] { return eval_pred(*pp, ctx, pred); }, r};
}

namespace {

struct Tree {
  std::vector<Operand> leaves;
  Schedule sched;
};

Task<SVec> combine_node(Party& p, std::shared_ptr<const Tree> tree, int idx, bool is_or) {
  const int leaves = static_cast<int>(tree->leaves.size());
  if (idx < leaves) {
    auto t = tree->leaves[static_cast<std::size_t>(idx)].make();
    SVec v = co_await std::move(t);
    co_return v;
  }
  const auto st = tree->sched.steps[static_cast<std::size_t>(idx - leaves)];
  SVec a, b;
  std::vector<Task<>> ts;
  ts.push_back(store(combine_node(p, tree, st.a, is_or), &a));
  ts.push_back(store(combine_node(p, tree, st.b, is_or), &b));
  auto all = run_all(p, std::move(ts));
  co_await std::move(all);
  auto t = is_or ? gates::or_(p, std::move(a), std::move(b)) : gates::and_(p, std::move(a), std::move(b));
  SVec r = co_await std::move(t);
  co_return r;
}

}  // namespace

Task<SVec> combine(Party& p, std::vector<Operand> ops, bool is_or, std::size_t n) {
  if (ops.empty()) co_return ones(p, n);
  auto tree = std::make_shared<Tree>();
  std::vector<unsigned> ready;
  for (const auto& o : ops) ready.push_back(o.ready);
  tree->sched = greedy_schedule(ready);
  tree->leaves = std::move(ops);
  auto t = combine_node(p, tree, tree->sched.root, is_or);
  SVec r = co_await std::move(t);
  co_return r;
}

Task<std::optional<SVec>> collapse(Party& p, std::optional<SVec> f, std::optional<SVec> d) {
  if (f && d) {
    auto t = gates::and_(p, std::move(*f), std::move(*d));
    SVec r = co_await std::move(t);
    co_return std::optional<SVec>(std::move(r));
  }
  co_return f ? f : d;
}

std::vector<SVec> split(const SVec& v, std::size_t parts) {
  std::vector<SVec> out;
  const std::size_t len = parts ? v.size() / parts : 0;
  for (std::size_t i = 0; i < parts; ++i) out.push_back(v.slice(i * len, len));
  return out;
}

}  // namespace detail

namespace ops {

using namespace detail;

SharedTable project(SharedTable t, const std::vector<std::string>& cols) {
  SharedTable out;
  out.rows = t.rows;
  out.f = std::move(t.f);
  out.d = std::move(t.d);
  for (const auto& c : cols) out.add(c, t.col(c));
  return out;
}

Task<SharedTable> select(Party& p, SharedTable t, Pred pred) {
  if (pred.is_true()) co_return t;
  auto ctx = table_ctx(t);
  std::vector<Operand> ops;
  for (const auto& c : pred.conjuncts()) ops.push_back(pred_operand(p, ctx, c));
  if (t.f) ops.push_back(value_operand(*t.f));
  auto task = combine(p, std::move(ops), false, t.rows);
  t.f = co_await std::move(task);
  co_return t;
}

namespace {

using Index = std::shared_ptr<const std::vector<std::size_t>>;

CtxPtr pair_ctx(std::shared_ptr<const SharedTable> l, std::shared_ptr<const SharedTable> r, Index il, Index ir,
                Shape both) {
  auto ctx = std::make_shared<EvalCtx>();
  ctx->shape = std::move(both);
  ctx->n = il->size();
  ctx->column = [l, r, il, ir](const std::string& name, int) {
    if (l->index(name) >= 0) return l->col(name).gather(*il);
    return r->col(name).gather(*ir);
  };
  return ctx;
}

// Evaluates a side predicate over the whole side table once, caches it and
// returns the rows selected by idx.
Task<SVec> eval_cached(Party& p, CtxPtr ctx, Pred pred, std::shared_ptr<std::vector<SVec>> cache, std::size_t k,
                       Index idx) {
  auto t = eval_pred(p, ctx, pred);
  SVec v = co_await std::move(t);
  (*cache)[k] = v;
  co_return v.gather(*idx);
}

void side_operands(Party& p, bool first, const std::vector<Pred>& conj, CtxPtr ctx,
                   const std::shared_ptr<std::vector<SVec>>& cache, const Index& idx, std::vector<Operand>& ops) {
  for (std::size_t k = 0; k < conj.size(); ++k) {
    if (first) {
      Operand o = pred_operand(p, ctx, conj[k]);
      Party* pp = &p;
      Pred pred = conj[k];
      o.make = [pp, ctx, pred, cache, k, idx] { return eval_cached(*pp, ctx, pred, cache, k, idx); };
      ops.push_back(std::move(o));
    } else {
      ops.push_back(value_operand((*cache)[k].gather(*idx)));
    }
  }
}

void flag_operands(const SharedTable& t, const Index& idx, std::vector<Operand>& ops) {
  if (t.f) ops.push_back(value_operand(t.f->gather(*idx)));
  if (t.d) ops.push_back(value_operand(t.d->gather(*idx)));
}

Shape joined_shape(const SharedTable& l, const SharedTable& r) {
  Shape s = l.shape();
  for (const auto& c : r.shape().cols) s.cols.push_back(c);
  return s;
}

std::vector<unsigned> readies(const std::vector<Operand>& ops) {
  std::vector<unsigned> v;
  for (const auto& o : ops) v.push_back(o.ready);
  return v;
}

}  // namespace

Task<SharedTable> join(Party& p, SharedTable l, SharedTable r, JoinSpec spec) {
  const std::size_t n = l.rows, m = r.rows, pairs = n * m;
  const std::size_t batch = std::max<std::size_t>(spec.batch_rows, 1);
  auto L = std::make_shared<const SharedTable>(l);
  auto R = std::make_shared<const SharedTable>(r);
  const Shape both = joined_shape(l, r);
  auto lctx = table_ctx(l), rctx = table_ctx(r);
  const auto theta = spec.theta.conjuncts();
  const auto lconj = spec.left_pred.conjuncts();
  const auto rconj = spec.right_pred.conjuncts();
  auto lcache = std::make_shared<std::vector<SVec>>(lconj.size());
  auto rcache = std::make_shared<std::vector<SVec>>(rconj.size());

  SVec flag(0, Mode::Boolean, 1);
  for (std::size_t start = 0; start < pairs; start += batch) {
    const std::size_t end = std::min(pairs, start + batch);
    auto il = std::make_shared<std::vector<std::size_t>>();
    auto ir = std::make_shared<std::vector<std::size_t>>();
    for (std::size_t q = start; q < end; ++q) {
      il->push_back(q / m);
      ir->push_back(q % m);
    }
    auto ctx = pair_ctx(L, R, il, ir, both);
    std::vector<Operand> ops;
    for (const auto& c : theta) ops.push_back(pred_operand(p, ctx, c));
    side_operands(p, start == 0, lconj, lctx, lcache, il, ops);
    side_operands(p, start == 0, rconj, rctx, rcache, ir, ops);
    flag_operands(l, il, ops);
    flag_operands(r, ir, ops);
    auto t = combine(p, std::move(ops), false, end - start);
    SVec part = co_await std::move(t);
    flag.append(part);
  }

  std::vector<std::size_t> il(pairs), ir(pairs);
  for (std::size_t q = 0; q < pairs; ++q) {
    il[q] = q / m;
    ir[q] = q % m;
  }
  SharedTable out;
  out.rows = pairs;
  for (std::size_t i = 0; i < l.names.size(); ++i) out.add(l.names[i], l.cols[i].gather(il));
  for (std::size_t i = 0; i < r.names.size(); ++i) out.add(r.names[i], r.cols[i].gather(ir));
  out.f = std::move(flag);
  co_return out;
}

namespace {

// OR over each run of m consecutive bits.
Task<SVec> or_runs(Party& p, SVec bits, std::size_t rows, std::size_t m) {
  std::size_t width = m;
  SVec cur = std::move(bits);
  while (width > 1) {
    const std::size_t half = width / 2, next = (width + 1) / 2;
    std::vector<std::size_t> a, b;
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t k = 0; k < half; ++k) {
        a.push_back(i * width + 2 * k);
        b.push_back(i * width + 2 * k + 1);
      }
    auto t = gates::or_(p, cur.gather(a), cur.gather(b));
    SVec ored = co_await std::move(t);
    SVec nxt(rows * next, Mode::Boolean, 1);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t k = 0; k < half; ++k) nxt.set(i * next + k, ored.at(i * half + k));
      if (width % 2) nxt.set(i * next + half, cur.at(i * width + width - 1));
    }
    cur = std::move(nxt);
    width = next;
  }
  co_return cur;
}

// Per-row count of set bits in each run of m, as arithmetic words.
Task<SVec> count_runs(Party& p, SVec bits, std::size_t rows, std::size_t m) {
  auto t = gates::b2a_bit(p, std::move(bits));
  SVec a = co_await std::move(t);
  SVec out(rows, Mode::Arithmetic, p.width());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      out.lo[i] += a.lo[i * m + j];
      out.hi[i] += a.hi[i * m + j];
    }
  p.count(rows * (m - 1));
  co_return out;
}

Task<SVec> match_stage(Party& p, std::vector<Operand> pair_ops, std::size_t rows, std::size_t m, bool partial,
                       SVec* counts) {
  auto t = combine(p, std::move(pair_ops), false, rows * m);
  SVec bits = co_await std::move(t);
  SVec any;
  std::vector<Task<>> ts;
  ts.push_back(store(or_runs(p, bits, rows, m), &any));
  if (partial) ts.push_back(store(count_runs(p, bits, rows, m), counts));
  auto all = run_all(p, std::move(ts));
  co_await std::move(all);
  co_return any;
}

}  // namespace

Task<SharedTable> semijoin(Party& p, SharedTable l, SharedTable r, JoinSpec spec) {
  if (spec.partial && spec.partial->fn != AggFn::Count)
    throw Error(Errc::UnsupportedFeature, "semijoin partial aggregate other than COUNT");
  const std::size_t n = l.rows, m = r.rows;
  const std::size_t per = std::max<std::size_t>(1, std::max<std::size_t>(spec.batch_rows, 1) / std::max<std::size_t>(m, 1));
  auto L = std::make_shared<const SharedTable>(l);
  auto R = std::make_shared<const SharedTable>(r);
  const Shape both = joined_shape(l, r);
  auto lctx = table_ctx(l), rctx = table_ctx(r);
  const auto theta = spec.theta.conjuncts();
  const auto lconj = spec.left_pred.conjuncts();
  const auto rconj = spec.right_pred.conjuncts();
  auto lcache = std::make_shared<std::vector<SVec>>(lconj.size());
  auto rcache = std::make_shared<std::vector<SVec>>(rconj.size());
  const bool partial = spec.partial.has_value();

  SVec flag(0, Mode::Boolean, 1);
  SVec counts(0, Mode::Arithmetic, p.width());
  for (std::size_t a = 0; a < n; a += per) {
    const std::size_t b = std::min(n, a + per), rows = b - a;
    auto il = std::make_shared<std::vector<std::size_t>>();
    auto ir = std::make_shared<std::vector<std::size_t>>();
    auto rows_idx = std::make_shared<std::vector<std::size_t>>();
    for (std::size_t i = a; i < b; ++i) {
      rows_idx->push_back(i);
      for (std::size_t j = 0; j < m; ++j) {
        il->push_back(i);
        ir->push_back(j);
      }
    }
    auto ctx = pair_ctx(L, R, il, ir, both);
    std::vector<Operand> pair_ops;
    for (const auto& c : theta) pair_ops.push_back(pred_operand(p, ctx, c));
    side_operands(p, a == 0, rconj, rctx, rcache, ir, pair_ops);
    flag_operands(r, ir, pair_ops);
    const auto pr = readies(pair_ops);
    const unsigned t1 = pr.empty() ? 0 : greedy_schedule(pr).rounds;
    const unsigned t_or = t1 + std::max<unsigned>(ceil_log2(m), partial ? 2 : 0);

    auto chunk_counts = std::make_shared<SVec>();
    std::vector<Operand> left_ops;
    {
      Party* pp = &p;
      auto shared_ops = std::make_shared<std::vector<Operand>>(std::move(pair_ops));
      SVec* slot = chunk_counts.get();
      left_ops.push_back({[pp, shared_ops, rows, m, partial, slot, chunk_counts] {
                            return match_stage(*pp, *shared_ops, rows, m, partial, slot);
                          },
                          t_or});
    }
    side_operands(p, a == 0, lconj, lctx, lcache, rows_idx, left_ops);
    flag_operands(l, rows_idx, left_ops);
    auto t = combine(p, std::move(left_ops), false, rows);
    SVec part = co_await std::move(t);
    flag.append(part);
    if (partial) counts.append(*chunk_counts);
  }

  SharedTable out;
  out.rows = n;
  out.names = l.names;
  out.cols = l.cols;
  if (partial) out.add(spec.partial->out, std::move(counts));
  out.f = std::move(flag);
  co_return out;
}

Task<SharedTable> adjacent(Party& p, SharedTable t, Pred pred) {
  const std::size_t n = t.rows;
  if (n <= 1) {
    t.f = zeros(p, n);
    t.d.reset();
    co_return t;
  }
  const std::size_t k = n - 1;
  auto owned = std::make_shared<const SharedTable>(t);
  auto ctx = std::make_shared<EvalCtx>();
  ctx->shape = t.shape();
  ctx->n = k;
  ctx->column = [owned, k](const std::string& name, int side) {
    return owned->col(name).slice(side ? 1 : 0, k);
  };
  std::vector<Operand> ops;
  for (const auto& c : pred.conjuncts()) ops.push_back(pred_operand(p, ctx, c));
  for (const auto* fl : {&t.f, &t.d})
    if (*fl) {
      ops.push_back(value_operand((*fl)->slice(0, k)));
      ops.push_back(value_operand((*fl)->slice(1, k)));
    }
  auto task = combine(p, std::move(ops), false, k);
  SVec w = co_await std::move(task);
  w.push_back(0, 0);
  t.f = std::move(w);
  t.d.reset();
  co_return t;
}

}  // namespace ops
}  // namespace secrecy
