#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "secrecy/data.hpp"
#include "secrecy/plan.hpp"
#include "secrecy/sql.hpp"

namespace secrecy::oracle {

// Cleartext reference engine. It evaluates the same plan IR over live rows
// with plain loops and signed 64-bit wrapping arithmetic, and shares no
// evaluation code with the secure path.

struct Rows {
  std::vector<std::string> names;
  std::vector<std::vector<std::int64_t>> rows;

  int index(const std::string& name) const;
};

/// Live rows of every node's output, in the order the node leaves them.
Rows eval(const PlanNode& plan, const PlainDb& db);

/// Result of a parsed query evaluated straight from its text with nested
/// loops, without plans. ROW_NUMBER is computed per partition; ORDER BY
/// breaks ties on the remaining output columns, ascending.
Rows eval(const sql::Query& q, const PlainDb& db);

bool eval_pred(const Pred& p, const Rows& t, const std::vector<std::int64_t>& row,
               const std::vector<std::int64_t>* next = nullptr);
std::int64_t eval_expr(const Expr& e, const Rows& t, const std::vector<std::int64_t>& row,
                       const std::vector<std::int64_t>* next = nullptr);

/// Sorted copy, for multiset comparison.
std::vector<std::vector<std::int64_t>> sorted(std::vector<std::vector<std::int64_t>> rows);

enum class Prim { Xor, And, Or, Not, Eq, Lt, Add, Sub, Mul, Mux, Ltz };
/// Plaintext counterpart of a primitive at the given width. Results are
/// reduced to width bits; comparisons return 0 or 1.
std::uint64_t primitive(Prim k, std::uint64_t x, std::uint64_t y = 0, std::uint64_t z = 0, unsigned width = 64);

}  // namespace secrecy::oracle
