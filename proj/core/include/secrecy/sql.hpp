#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "secrecy/plan.hpp"
#include "secrecy/predicate.hpp"

namespace secrecy::sql {

struct Query;
using QueryPtr = std::shared_ptr<const Query>;

struct SqlExpr;
using SqlExprPtr = std::shared_ptr<const SqlExpr>;

struct OrderItem {
  SqlExprPtr expr;
  bool desc = false;
};

struct SqlExpr {
  enum class Kind { Column, Int, String, Add, Sub, Aggregate, RowNumber, Concat };
  Kind kind = Kind::Int;
  std::string qualifier;  // Column, may be empty
  std::string name;       // Column
  std::int64_t value = 0;
  std::string text;       // String literal
  std::vector<SqlExprPtr> args;
  // Aggregate; an empty args list is COUNT(*).
  AggFn fn = AggFn::Count;
  bool distinct = false;
  // RowNumber window
  std::vector<SqlExprPtr> partition_by;
  std::vector<OrderItem> order_by;
};

struct Cond {
  enum class Kind { Cmp, And, Or, Not, In };
  Kind kind = Kind::Cmp;
  CmpOp op = CmpOp::Eq;
  SqlExprPtr lhs, rhs;  // In: lhs is the probe
  std::vector<Cond> kids;
  QueryPtr sub;

  std::vector<Cond> conjuncts() const;
};

struct TableRef {
  std::string table;  // base table or CTE name when sub is null
  QueryPtr sub;
  std::string alias;  // defaults to the table name
};

struct Cte {
  std::string name;
  QueryPtr body;
};

struct Query {
  std::vector<Cte> with;
  bool distinct = false;
  bool star = false;
  struct Item {
    SqlExprPtr expr;
    std::string alias;
  };
  std::vector<Item> select;
  std::vector<TableRef> from;
  std::vector<std::optional<Cond>> on;  // on[i] joins from[i]; on[0] is always empty
  std::optional<Cond> where;
  std::vector<SqlExprPtr> group_by;
  std::optional<Cond> having;
  std::vector<OrderItem> order_by;
  std::optional<std::size_t> limit;
};

/// Parses one query. Throws SyntaxError with the byte offset, or
/// UnsupportedFeature for outer joins, nested aggregates, window functions
/// other than ROW_NUMBER and, in strict mode, SELECT *.
Query parse(std::string_view text, bool strict = true);

std::string to_string(const SqlExpr& e);
/// Display name of a select item: its alias, column name or aggregate text.
std::string output_name(const Query::Item& item);

/// FNV-1a hash used for string values in CSV files and string literals.
std::uint64_t hash_string(std::string_view s);

}  // namespace secrecy::sql
