#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "secrecy/plan.hpp"
#include "secrecy/predicate.hpp"

namespace secrecy {

struct CostVector {
  std::uint64_t ops = 0;
  std::uint64_t rounds = 0;

  CostVector& operator+=(const CostVector& o) {
    ops += o.ops;
    rounds += o.rounds;
    return *this;
  }
  friend CostVector operator+(CostVector a, const CostVector& b) { return a += b; }
  friend bool operator==(const CostVector&, const CostVector&) = default;
};

struct CostParams {
  unsigned width = kWordBits;
  double alpha = 1.0;
  double beta = 1000.0;
  std::size_t batch_rows = 4096;

  double weigh(const CostVector& c) const { return alpha * double(c.ops) + beta * double(c.rounds); }
};

enum class Prim { Xor, And, Or, Not, Ltz, Mux, Mul, ArithAdd, Eq, Ineq, CompareSwap, Rca, B2aBit, B2a, A2b };

/// Per-element cost of one primitive at width w.
CostVector cost_primitive(Prim kind, unsigned w = kWordBits);

/// Lexicographic comparators over units of the given widths.
CostVector cost_lt_multi(const std::vector<unsigned>& widths);
CostVector cost_eq_multi(const std::vector<unsigned>& widths);

/// Per-row cost of an expression / predicate. Column modes come from the
/// shape; arithmetic columns are converted before use.
CostVector cost_expr(const Expr& e, const Shape& s, unsigned w = kWordBits);
CostVector cost_predicate(const Pred& p, const Shape& s, unsigned w = kWordBits);
/// The same for a predicate with no column context (all boolean).
CostVector cost_predicate(const Pred& p, unsigned w = kWordBits);

/// Ready rounds and per-row ops of the operands of an AND pool: the
/// conjuncts of p followed by extra ready-at-zero flags.
struct Pool {
  std::vector<unsigned> ready;
  std::uint64_t atom_ops = 0;  // per element, all conjuncts
};
Pool conjunct_pool(const Pred& p, const Shape& s, std::size_t extra_flags, unsigned w = kWordBits);

/// Cost of one operator given its input shapes.
CostVector cost_operator(const PlanNode& n, const std::vector<Shape>& in, const CostParams& params);

/// Sort network with the given comparator and moved-column counts.
CostVector cost_sort_network(std::size_t n, const std::vector<unsigned>& unit_widths, std::size_t moved);

enum class CompOp { Select, Join, SemiJoin, GroupBy, Distinct, OrderBy };

/// Cost of gluing an upstream operator's flag into a downstream operator on
/// n rows. Throws UnknownPair for unlisted pairs.
CostVector cost_composition(CompOp upstream, CompOp downstream, std::size_t n);

struct NodeCost {
  const PlanNode* node = nullptr;
  int depth = 0;
  CostVector cost;
  std::uint64_t composition_rounds = 0;
  CostVector cumulative;
  Shape shape;
};

struct PlanCost {
  CostVector total;
  double scalar = 0;
  std::vector<NodeCost> nodes;  // evaluation order (children before parents)
};

PlanCost cost_plan(const PlanNode& plan, const Catalog& cat, const CostParams& params);

}  // namespace secrecy
