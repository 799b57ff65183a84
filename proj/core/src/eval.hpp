#pragma once

// Internal helpers shared by the operator implementations.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "secrecy/party.hpp"
#include "secrecy/plan.hpp"
#include "secrecy/predicate.hpp"
#include "secrecy/primitives.hpp"
#include "secrecy/table.hpp"

namespace secrecy::detail {

Task<> store(Task<SVec> t, SVec* out);
Task<SVec> ready(SVec v);
Task<> run_all(Party& p, std::vector<Task<>> tasks);

SVec ones(const Party& p, std::size_t n);
SVec zeros(const Party& p, std::size_t n, unsigned bits = 1);

/// Column source for predicate evaluation: returns the operand vector of a
/// column (side selects the later row of an adjacent pair).
struct EvalCtx {
  std::function<SVec(const std::string&, int)> column;
  Shape shape;  // column modes, for schedule estimates
  std::size_t n = 0;
};
using CtxPtr = std::shared_ptr<const EvalCtx>;

CtxPtr table_ctx(const SharedTable& t);

Task<SVec> eval_expr(Party& p, CtxPtr ctx, ExprPtr e);
Task<SVec> eval_pred(Party& p, CtxPtr ctx, Pred pred);

/// Operand of an AND/OR pool: a producer and the round it completes in.
struct Operand {
  std::function<Task<SVec>()> make;
  unsigned ready = 0;
};
Operand value_operand(SVec v);
Operand pred_operand(Party& p, CtxPtr ctx, const Pred& pred);

/// Combines operands pairwise in greedy schedule order. Empty pools yield n
/// public ones.
Task<SVec> combine(Party& p, std::vector<Operand> ops, bool is_or, std::size_t n);

/// f AND d, or whichever exists; nullopt when the table has no flags.
Task<std::optional<SVec>> collapse(Party& p, std::optional<SVec> f, std::optional<SVec> d);

/// Splits a vector concatenated from equal-length parts.
std::vector<SVec> split(const SVec& v, std::size_t parts);

}  // namespace secrecy::detail
