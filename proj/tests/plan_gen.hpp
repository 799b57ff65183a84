#pragma once

#include <random>

#include "secrecy/cost.hpp"
#include "secrecy/error.hpp"
#include "secrecy/plan.hpp"
#include "plan_harness.hpp"

namespace secrecy::test {

inline PlainDb rs_db(std::size_t n, std::size_t m, std::uint64_t seed) {
  PlainDb db;
  db["r"] = random_table({"id", "ak", "a"}, n, 0, 4, seed);
  db["s"] = random_table({"id", "b"}, m, 0, 4, seed + 1);
  return db;
}

// Random well-typed plans over r and s.
class PlanGen {
 public:
  explicit PlanGen(std::uint64_t seed) : g_(seed) {}

  PlanPtr plan(const Catalog& cat) {
    for (;;) {
      PlanPtr p = grow(3);
      try {
        cost_plan(*p, cat, {});
        return p;
      } catch (const Error&) {
      }
    }
  }

 private:
  static ExprPtr col(const std::string& c) { return Expr::col(c, 0); }
  static ExprPtr lit(std::int64_t v) { return Expr::constant(static_cast<Word>(v)); }
  static Pred cmp(CmpOp op, ExprPtr a, ExprPtr b) { return Pred::cmp(op, std::move(a), std::move(b)); }
  static Pred eq(const std::string& a, const std::string& b) { return cmp(CmpOp::Eq, col(a), col(b)); }
  static PlanPtr scan(const std::string& t) {
    return t == "r" ? make_scan("r", "r", {"id", "ak", "a"}) : make_scan("s", "s", {"id", "b"});
  }
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(g_); }

  std::string any_col(const std::vector<std::string>& cols) { return cols[static_cast<std::size_t>(pick(int(cols.size())))]; }

  Pred atom(const std::vector<std::string>& cols) {
    const CmpOp op = static_cast<CmpOp>(pick(6));
    if (pick(3) == 0) return cmp(op, col(any_col(cols)), col(any_col(cols)));
    return cmp(op, col(any_col(cols)), lit(pick(4)));
  }

  Pred pred(const std::vector<std::string>& cols) {
    switch (pick(4)) {
      case 0: return Pred::conj({atom(cols), atom(cols)});
      case 1: return Pred::disj({atom(cols), atom(cols)});
      default: return atom(cols);
    }
  }

  static std::vector<std::string> cols_of(const PlanPtr& p, const std::string& alias) {
    if (alias == "r") return {"r.id", "r.ak", "r.a"};
    (void)p;
    return {"s.id", "s.b"};
  }

  // Filter-style subtree whose output keeps the scan's columns.
  PlanPtr leaf(const std::string& t, int depth) {
    PlanPtr p = scan(t);
    const auto cols = cols_of(p, t);
    if (depth > 0 && pick(2)) p = make_select(p, pred(cols));
    if (depth > 0 && pick(3) == 0) p = make_select(p, pred(cols));
    if (depth > 0 && pick(4) == 0) p = make_sort(p, {{any_col(cols), pick(2) == 1}});
    return p;
  }

  PlanPtr grow(int depth) {
    const std::string t = pick(2) ? "r" : "s";
    PlanPtr in = leaf(t, depth);
    std::vector<std::string> cols = cols_of(in, t);
    switch (pick(6)) {
      case 0: {  // join
        PlanPtr r = leaf("s", depth - 1);
        PlanPtr l = leaf("r", depth - 1);
        in = make_join(l, r, pick(3) ? eq("r.id", "s.id") : Pred::conj({eq("r.id", "s.id"), atom({"r.a", "s.b"})}));
        cols = {"r.id", "r.ak", "r.a", "s.id", "s.b"};
        break;
      }
      case 1:
        in = make_semijoin(leaf("r", depth - 1), leaf("s", depth - 1), eq("r.id", "s.id"));
        cols = {"r.id", "r.ak", "r.a"};
        break;
      default: break;
    }
    if (pick(3) == 0) in = make_select(in, pred(cols));
    switch (pick(5)) {
      case 0: return make_distinct(in, {any_col(cols)});
      case 1: {
        static const AggFn fns[] = {AggFn::Count, AggFn::Sum, AggFn::Min, AggFn::Max, AggFn::Avg};
        std::vector<AggSpec> aggs = {{fns[pick(5)], any_col(cols), "x"}};
        if (pick(2)) aggs.push_back({AggFn::Count, "", "c"});
        return make_groupby(in, {any_col(cols)}, aggs);
      }
      case 2: return make_global_agg(in, {{AggFn::Count, "", "c"}, {AggFn::Sum, any_col(cols), "s"}});
      case 3: return make_shuffle(in);
      default: return in;
    }
  }

  std::mt19937_64 g_;
};


}  // namespace secrecy::test
