#pragma once

#include <functional>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "secrecy/share.hpp"

namespace secrecy {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Scalar expression over qualified column names. side selects the row of an
/// adjacent pair (0 = earlier row, 1 = later row) and is ignored elsewhere.
struct Expr {
  enum class Kind { Col, Const, Add, Sub };
  Kind kind = Kind::Const;
  std::string name;
  int side = 0;
  Word value = 0;
  ExprPtr a, b;

  static ExprPtr col(std::string name, int side = 0);
  static ExprPtr constant(Word v);
  static ExprPtr add(ExprPtr a, ExprPtr b);
  static ExprPtr sub(ExprPtr a, ExprPtr b);
};

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };

/// Boolean predicate tree. Sign is a local sign test on a column holding a
/// proactively shared difference.
struct Pred {
  enum class Kind { True, Cmp, Sign, And, Or, Not };
  Kind kind = Kind::True;
  CmpOp op = CmpOp::Eq;
  ExprPtr lhs, rhs;
  std::vector<Pred> kids;

  static Pred truth() { return {}; }
  static Pred cmp(CmpOp op, ExprPtr l, ExprPtr r);
  static Pred sign(std::string column, int side = 0);
  static Pred conj(std::vector<Pred> ps);
  static Pred disj(std::vector<Pred> ps);
  static Pred negate(Pred p);

  bool is_true() const { return kind == Kind::True; }
  /// Top-level conjuncts (a single element when not a conjunction).
  std::vector<Pred> conjuncts() const;
};

std::string to_string(const Expr& e);
std::string to_string(const Pred& p);
std::string to_string(CmpOp op);

/// Columns referenced, as (name, side) pairs collapsed to names.
void columns_of(const Expr& e, std::set<std::string>& out);
void columns_of(const Pred& p, std::set<std::string>& out);
std::set<std::string> columns_of(const Pred& p);

/// Replaces column names by f(name).
ExprPtr rename(const ExprPtr& e, const std::function<std::string(const std::string&)>& f);
Pred rename(const Pred& p, const std::function<std::string(const std::string&)>& f);

bool operator==(const Expr& a, const Expr& b);
bool operator==(const Pred& a, const Pred& b);

/// Pairwise combination order for an n-ary AND/OR whose operands become
/// available at the given round offsets. The two earliest operands are always
/// combined first, which minimizes the completion round.
struct Schedule {
  struct Step {
    int a, b;  // operand indices; step k produces operand ready.size() + k
  };
  std::vector<Step> steps;
  unsigned rounds = 0;  // completion round of the root
  int root = -1;
};
Schedule greedy_schedule(const std::vector<unsigned>& ready);

/// Proactive column names for column c and public constant k.
std::string minus_const_column(const std::string& c, Word k);  // c - k
std::string const_minus_column(const std::string& c, Word k);  // k - c
std::string plus_const_column(const std::string& c, Word k);   // c + k

}  // namespace secrecy
