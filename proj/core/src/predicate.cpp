#include "secrecy/predicate.hpp"

#include <algorithm>
#include <sstream>

namespace secrecy {

ExprPtr Expr::col(std::string name, int side) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Col;
  e->name = std::move(name);
  e->side = side;
  return e;
}

ExprPtr Expr::constant(Word v) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Const;
  e->value = v;
  return e;
}

ExprPtr Expr::add(ExprPtr a, ExprPtr b) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Add;
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}

ExprPtr Expr::sub(ExprPtr a, ExprPtr b) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Sub;
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}

Pred Pred::cmp(CmpOp op, ExprPtr l, ExprPtr r) {
  Pred p;
  p.kind = Kind::Cmp;
  p.op = op;
  p.lhs = std::move(l);
  p.rhs = std::move(r);
  return p;
}

Pred Pred::sign(std::string column, int side) {
  Pred p;
  p.kind = Kind::Sign;
  p.lhs = Expr::col(std::move(column), side);
  return p;
}

namespace {

Pred nary(Pred::Kind k, std::vector<Pred> ps) {
  std::vector<Pred> flat;
  for (auto& p : ps) {
    if (p.is_true() && k == Pred::Kind::And) continue;
    if (p.kind == k) {
      for (auto& q : p.kids) flat.push_back(std::move(q));
    } else {
      flat.push_back(std::move(p));
    }
  }
  if (flat.empty()) return Pred::truth();
  if (flat.size() == 1) return std::move(flat.front());
  Pred out;
  out.kind = k;
  out.kids = std::move(flat);
  return out;
}

}  // namespace

Pred Pred::conj(std::vector<Pred> ps) { return nary(Kind::And, std::move(ps)); }
Pred Pred::disj(std::vector<Pred> ps) { return nary(Kind::Or, std::move(ps)); }

Pred Pred::negate(Pred p) {
  if (p.kind == Kind::Not) return std::move(p.kids.front());
  Pred out;
  out.kind = Kind::Not;
  out.kids.push_back(std::move(p));
  return out;
}

std::vector<Pred> Pred::conjuncts() const {
  if (kind == Kind::And) return kids;
  if (kind == Kind::True) return {};
  return {*this};
}

std::string to_string(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "=";
    case CmpOp::Ne: return "<>";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
  }
  return "?";
}

std::string to_string(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Col:
      return e.side ? "next." + e.name : e.name;
    case Expr::Kind::Const:
      return std::to_string(static_cast<std::int64_t>(e.value));
    case Expr::Kind::Add:
      return "(" + to_string(*e.a) + " + " + to_string(*e.b) + ")";
    case Expr::Kind::Sub:
      return "(" + to_string(*e.a) + " - " + to_string(*e.b) + ")";
  }
  return "?";
}

std::string to_string(const Pred& p) {
  switch (p.kind) {
    case Pred::Kind::True:
      return "true";
    case Pred::Kind::Cmp:
      return to_string(*p.lhs) + " " + to_string(p.op) + " " + to_string(*p.rhs);
    case Pred::Kind::Sign:
      return "sign(" + to_string(*p.lhs) + ")";
    case Pred::Kind::Not:
      return "NOT " + to_string(p.kids.front());
    case Pred::Kind::And:
    case Pred::Kind::Or: {
      std::string sep = p.kind == Pred::Kind::And ? " AND " : " OR ";
      std::string s = "(";
      for (std::size_t i = 0; i < p.kids.size(); ++i) s += (i ? sep : "") + to_string(p.kids[i]);
      return s + ")";
    }
  }
  return "?";
}

void columns_of(const Expr& e, std::set<std::string>& out) {
  if (e.kind == Expr::Kind::Col) out.insert(e.name);
  if (e.a) columns_of(*e.a, out);
  if (e.b) columns_of(*e.b, out);
}

void columns_of(const Pred& p, std::set<std::string>& out) {
  if (p.lhs) columns_of(*p.lhs, out);
  if (p.rhs) columns_of(*p.rhs, out);
  for (const auto& k : p.kids) columns_of(k, out);
}

std::set<std::string> columns_of(const Pred& p) {
  std::set<std::string> s;
  columns_of(p, s);
  return s;
}

ExprPtr rename(const ExprPtr& e, const std::function<std::string(const std::string&)>& f) {
  if (!e) return e;
  auto c = std::make_shared<Expr>(*e);
  if (c->kind == Expr::Kind::Col) c->name = f(c->name);
  c->a = rename(e->a, f);
  c->b = rename(e->b, f);
  return c;
}

Pred rename(const Pred& p, const std::function<std::string(const std::string&)>& f) {
  Pred q = p;
  q.lhs = rename(p.lhs, f);
  q.rhs = rename(p.rhs, f);
  for (auto& k : q.kids) k = rename(k, f);
  return q;
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.name != b.name || a.side != b.side || a.value != b.value) return false;
  auto same = [](const ExprPtr& x, const ExprPtr& y) { return (!x && !y) || (x && y && *x == *y); };
  return same(a.a, b.a) && same(a.b, b.b);
}

bool operator==(const Pred& a, const Pred& b) {
  if (a.kind != b.kind || a.op != b.op || a.kids != b.kids) return false;
  auto same = [](const ExprPtr& x, const ExprPtr& y) { return (!x && !y) || (x && y && *x == *y); };
  return same(a.lhs, b.lhs) && same(a.rhs, b.rhs);
}

Schedule greedy_schedule(const std::vector<unsigned>& ready) {
  Schedule s;
  if (ready.empty()) return s;
  std::vector<std::pair<unsigned, int>> pool;
  for (std::size_t i = 0; i < ready.size(); ++i) pool.emplace_back(ready[i], static_cast<int>(i));
  int next = static_cast<int>(ready.size());
  while (pool.size() > 1) {
    std::sort(pool.begin(), pool.end());
    auto a = pool[0], b = pool[1];
    pool.erase(pool.begin(), pool.begin() + 2);
    s.steps.push_back({a.second, b.second});
    pool.emplace_back(std::max(a.first, b.first) + 1, next++);
  }
  s.rounds = pool.front().first;
  s.root = pool.front().second;
  return s;
}

namespace {
std::string decimal(Word k) { return std::to_string(static_cast<std::int64_t>(k)); }
}  // namespace

std::string minus_const_column(const std::string& c, Word k) { return c + "-" + decimal(k); }
std::string const_minus_column(const std::string& c, Word k) { return decimal(k) + "-" + c; }
std::string plus_const_column(const std::string& c, Word k) { return c + "+" + decimal(k); }

}  // namespace secrecy
