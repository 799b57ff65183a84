#include "secrecy/sql.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "secrecy/error.hpp"

namespace secrecy::sql {

std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::vector<Cond> Cond::conjuncts() const {
  if (kind != Kind::And) return {*this};
  std::vector<Cond> out;
  for (const auto& k : kids) {
    auto sub = k.conjuncts();
    out.insert(out.end(), sub.begin(), sub.end());
  }
  return out;
}

std::string to_string(const SqlExpr& e) {
  switch (e.kind) {
    case SqlExpr::Kind::Column: return e.qualifier.empty() ? e.name : e.qualifier + "." + e.name;
    case SqlExpr::Kind::Int: return std::to_string(e.value);
    case SqlExpr::Kind::String: return "'" + e.text + "'";
    case SqlExpr::Kind::Add: return to_string(*e.args[0]) + " + " + to_string(*e.args[1]);
    case SqlExpr::Kind::Sub: return to_string(*e.args[0]) + " - " + to_string(*e.args[1]);
    case SqlExpr::Kind::Aggregate: {
      std::string f = to_string(e.fn);
      std::transform(f.begin(), f.end(), f.begin(), [](unsigned char c) { return std::tolower(c); });
      return f + "(" + (e.distinct ? "distinct " : "") + (e.args.empty() ? "*" : to_string(*e.args[0])) + ")";
    }
    case SqlExpr::Kind::RowNumber: return "row_number()";
    case SqlExpr::Kind::Concat: {
      std::string s = "concat(";
      for (std::size_t i = 0; i < e.args.size(); ++i) s += (i ? ", " : "") + to_string(*e.args[i]);
      return s + ")";
    }
  }
  return {};
}

std::string output_name(const Query::Item& item) {
  if (!item.alias.empty()) return item.alias;
  if (item.expr->kind == SqlExpr::Kind::Column) return item.expr->name;
  return to_string(*item.expr);
}

namespace {

struct Token {
  enum class Kind { Ident, Int, Str, Sym, End };
  Kind kind = Kind::End;
  std::string text;  // identifiers lower-cased, symbols verbatim
  std::int64_t value = 0;
  std::size_t pos = 0;
};

[[noreturn]] void syntax(std::size_t pos, const std::string& what) {
  throw Error(Errc::SyntaxError, what + " at offset " + std::to_string(pos));
}

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (c == '-' && i + 1 < s.size() && s[i + 1] == '-') {  // comment to end of line
      while (i < s.size() && s[i] != '\n') ++i;
      continue;
    }
    Token t;
    t.pos = i;
    if (std::isalpha(c) || c == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      t.kind = Token::Kind::Ident;
      for (std::size_t k = i; k < j; ++k) t.text += static_cast<char>(std::tolower(static_cast<unsigned char>(s[k])));
      i = j;
    } else if (std::isdigit(c)) {
      std::size_t j = i;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      t.kind = Token::Kind::Int;
      t.text = std::string(s.substr(i, j - i));
      auto [p, ec] = std::from_chars(s.data() + i, s.data() + j, t.value);
      if (ec != std::errc()) syntax(i, "integer out of range");
      (void)p;
      i = j;
    } else if (c == '\'') {
      t.kind = Token::Kind::Str;
      std::size_t j = i + 1;
      for (;; ++j) {
        if (j >= s.size()) syntax(i, "unterminated string");
        if (s[j] == '\'') {
          if (j + 1 < s.size() && s[j + 1] == '\'') {
            t.text += '\'';
            ++j;
            continue;
          }
          break;
        }
        t.text += s[j];
      }
      i = j + 1;
    } else {
      static const char* two[] = {"<=", ">=", "<>", "!="};
      t.kind = Token::Kind::Sym;
      for (const char* op : two)
        if (s.substr(i, 2) == op) t.text = op;
      if (t.text.empty()) {
        if (std::string_view("(),.*+-=<>;").find(static_cast<char>(c)) == std::string_view::npos)
          syntax(i, std::string("unexpected character '") + static_cast<char>(c) + "'");
        t.text = std::string(1, static_cast<char>(c));
      }
      i += t.text.size();
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.pos = s.size();
  out.push_back(end);
  return out;
}

bool reserved(const std::string& w) {
  static const char* words[] = {"select", "from",  "where", "group", "having", "order", "limit", "join",
                                "on",     "inner", "left",  "right", "full",   "outer", "cross", "and",
                                "or",     "not",   "in",    "as",    "by",     "with",  "distinct", "union"};
  return std::find(std::begin(words), std::end(words), w) != std::end(words);
}

class Parser {
 public:
  Parser(std::vector<Token> toks, bool strict) : t_(std::move(toks)), strict_(strict) {}

  Query top() {
    Query q = query();
    accept_sym(";");
    if (peek().kind != Token::Kind::End) syntax(peek().pos, "unexpected '" + peek().text + "'");
    return q;
  }

 private:
  const Token& peek(std::size_t k = 0) const { return t_[std::min(i_ + k, t_.size() - 1)]; }
  const Token& next() { return t_[std::min(i_++, t_.size() - 1)]; }

  bool is_word(const char* w, std::size_t k = 0) const {
    return peek(k).kind == Token::Kind::Ident && peek(k).text == w;
  }
  bool is_sym(const char* s, std::size_t k = 0) const { return peek(k).kind == Token::Kind::Sym && peek(k).text == s; }
  bool accept_word(const char* w) {
    if (!is_word(w)) return false;
    ++i_;
    return true;
  }
  bool accept_sym(const char* s) {
    if (!is_sym(s)) return false;
    ++i_;
    return true;
  }
  void expect_word(const char* w) {
    if (!accept_word(w)) syntax(peek().pos, std::string("expected ") + w);
  }
  void expect_sym(const char* s) {
    if (!accept_sym(s)) syntax(peek().pos, std::string("expected '") + s + "'");
  }
  std::string ident() {
    if (peek().kind != Token::Kind::Ident || reserved(peek().text)) syntax(peek().pos, "expected identifier");
    return next().text;
  }
  [[noreturn]] void unsupported(const std::string& what) const {
    throw Error(Errc::UnsupportedFeature, what + " at offset " + std::to_string(peek().pos));
  }

  Query query() {
    Query q;
    if (accept_word("with")) {
      do {
        Cte c;
        c.name = ident();
        expect_word("as");
        expect_sym("(");
        c.body = std::make_shared<const Query>(query());
        expect_sym(")");
        q.with.push_back(std::move(c));
      } while (accept_sym(","));
    }
    expect_word("select");
    q.distinct = accept_word("distinct");
    if (accept_sym("*")) {
      if (strict_) throw Error(Errc::UnsupportedFeature, "SELECT * returns raw rows");
      q.star = true;
    } else {
      do {
        Query::Item item;
        item.expr = expr();
        if (accept_word("as"))
          item.alias = ident();
        else if (peek().kind == Token::Kind::Ident && !reserved(peek().text))
          item.alias = ident();
        q.select.push_back(std::move(item));
      } while (accept_sym(","));
    }
    expect_word("from");
    q.from.push_back(table_ref());
    q.on.emplace_back();
    for (;;) {
      if (accept_sym(",")) {
        q.from.push_back(table_ref());
        q.on.emplace_back();
      } else if (is_word("left") || is_word("right") || is_word("full") || is_word("outer")) {
        unsupported("outer join");
      } else if (accept_word("cross")) {
        expect_word("join");
        q.from.push_back(table_ref());
        q.on.emplace_back();
      } else if (is_word("join") || is_word("inner")) {
        accept_word("inner");
        expect_word("join");
        q.from.push_back(table_ref());
        expect_word("on");
        q.on.emplace_back(cond());
      } else {
        break;
      }
    }
    if (accept_word("where")) q.where = cond();
    if (accept_word("group")) {
      expect_word("by");
      do q.group_by.push_back(expr());
      while (accept_sym(","));
    }
    if (accept_word("having")) q.having = cond();
    if (accept_word("order")) {
      expect_word("by");
      do q.order_by.push_back(order_item());
      while (accept_sym(","));
    }
    if (accept_word("limit")) {
      if (peek().kind != Token::Kind::Int) syntax(peek().pos, "expected row count");
      q.limit = static_cast<std::size_t>(next().value);
    }
    if (is_word("union")) unsupported("UNION");
    return q;
  }

  TableRef table_ref() {
    TableRef r;
    if (accept_sym("(")) {
      r.sub = std::make_shared<const Query>(query());
      expect_sym(")");
      accept_word("as");
      r.alias = ident();
      return r;
    }
    r.table = ident();
    if (accept_word("as"))
      r.alias = ident();
    else if (peek().kind == Token::Kind::Ident && !reserved(peek().text))
      r.alias = ident();
    else
      r.alias = r.table;
    return r;
  }

  OrderItem order_item() {
    OrderItem o;
    o.expr = expr();
    if (accept_word("desc"))
      o.desc = true;
    else
      accept_word("asc");
    return o;
  }

  static SqlExprPtr make(SqlExpr e) { return std::make_shared<const SqlExpr>(std::move(e)); }

  SqlExprPtr expr() {
    SqlExprPtr e = primary();
    while (is_sym("+") || is_sym("-")) {
      SqlExpr b;
      b.kind = next().text == "+" ? SqlExpr::Kind::Add : SqlExpr::Kind::Sub;
      b.args = {e, primary()};
      e = make(std::move(b));
    }
    return e;
  }

  static bool has_aggregate(const SqlExpr& e) {
    if (e.kind == SqlExpr::Kind::Aggregate) return true;
    return std::any_of(e.args.begin(), e.args.end(), [](const SqlExprPtr& a) { return has_aggregate(*a); });
  }

  SqlExprPtr primary() {
    SqlExpr e;
    const Token& t = peek();
    if (t.kind == Token::Kind::Int || (is_sym("-") && peek(1).kind == Token::Kind::Int)) {
      const bool neg = accept_sym("-");
      e.kind = SqlExpr::Kind::Int;
      e.value = neg ? -next().value : next().value;
      if (!accept_word("days")) accept_word("day");  // dates are day counts
      return make(std::move(e));
    }
    if (t.kind == Token::Kind::Str) {
      e.kind = SqlExpr::Kind::String;
      e.text = next().text;
      return make(std::move(e));
    }
    if (accept_sym("(")) {
      if (is_word("select")) unsupported("scalar subquery");
      SqlExprPtr inner = expr();
      expect_sym(")");
      return inner;
    }
    if (t.kind != Token::Kind::Ident || reserved(t.text)) syntax(t.pos, "expected expression");
    const std::string word = next().text;
    if (accept_sym("(")) return call(word);
    e.kind = SqlExpr::Kind::Column;
    if (accept_sym(".")) {
      e.qualifier = word;
      e.name = ident();
    } else {
      e.name = word;
    }
    return make(std::move(e));
  }

  // After "name(".
  SqlExprPtr call(const std::string& fn) {
    SqlExpr e;
    static const std::pair<const char*, AggFn> aggs[] = {
        {"count", AggFn::Count}, {"sum", AggFn::Sum}, {"min", AggFn::Min}, {"max", AggFn::Max}, {"avg", AggFn::Avg}};
    for (const auto& [name, f] : aggs) {
      if (fn != name) continue;
      e.kind = SqlExpr::Kind::Aggregate;
      e.fn = f;
      e.distinct = accept_word("distinct");
      if (f == AggFn::Count && !e.distinct && accept_sym("*")) {
        expect_sym(")");
      } else {
        SqlExprPtr arg = expr();
        if (has_aggregate(*arg)) unsupported("nested aggregate");
        e.args = {arg};
        expect_sym(")");
      }
      if (is_word("over")) unsupported("aggregate window function");
      if (e.distinct && f != AggFn::Count) unsupported("DISTINCT inside " + fn);
      return make(std::move(e));
    }
    if (fn == "concat") {
      e.kind = SqlExpr::Kind::Concat;
      do e.args.push_back(expr());
      while (accept_sym(","));
      expect_sym(")");
      return make(std::move(e));
    }
    if (fn == "row_number" || fn == "row_no") {
      expect_sym(")");
      expect_word("over");
      expect_sym("(");
      e.kind = SqlExpr::Kind::RowNumber;
      if (accept_word("partition")) {
        expect_word("by");
        do e.partition_by.push_back(expr());
        while (accept_sym(","));
      }
      expect_word("order");
      expect_word("by");
      do e.order_by.push_back(order_item());
      while (accept_sym(","));
      expect_sym(")");
      return make(std::move(e));
    }
    // Skip the argument list to report windows precisely.
    for (int depth = 1; depth > 0;) {
      if (peek().kind == Token::Kind::End) syntax(peek().pos, "unterminated call");
      if (is_sym("(")) ++depth;
      if (is_sym(")")) --depth;
      next();
    }
    if (is_word("over")) unsupported("window function " + fn);
    unsupported("function " + fn);
  }

  Cond cond() {
    Cond c = conj();
    if (!is_word("or")) return c;
    Cond o;
    o.kind = Cond::Kind::Or;
    o.kids.push_back(std::move(c));
    while (accept_word("or")) o.kids.push_back(conj());
    return o;
  }

  Cond conj() {
    Cond c = negation();
    if (!is_word("and")) return c;
    Cond a;
    a.kind = Cond::Kind::And;
    a.kids.push_back(std::move(c));
    while (accept_word("and")) a.kids.push_back(negation());
    return a;
  }

  Cond negation() {
    if (accept_word("not")) {
      Cond n;
      n.kind = Cond::Kind::Not;
      n.kids.push_back(negation());
      return n;
    }
    if (is_sym("(") && !is_word("select", 1)) {
      // Either a parenthesized condition or an expression that starts with '('.
      const std::size_t save = i_;
      try {
        ++i_;
        Cond c = cond();
        expect_sym(")");
        if (!comparison_next()) return c;
      } catch (const Error& e) {
        if (e.code() != Errc::SyntaxError) throw;
      }
      i_ = save;
    }
    return comparison();
  }

  bool comparison_next() const {
    for (const char* s : {"=", "<>", "!=", "<", "<=", ">", ">=", "+", "-"})
      if (is_sym(s)) return true;
    return false;
  }

  Cond comparison() {
    Cond c;
    c.lhs = expr();
    if (is_word("not") && is_word("in", 1)) unsupported("NOT IN");
    if (accept_word("in")) {
      c.kind = Cond::Kind::In;
      expect_sym("(");
      if (!is_word("select")) unsupported("IN list");
      c.sub = std::make_shared<const Query>(query());
      expect_sym(")");
      return c;
    }
    static const std::pair<const char*, CmpOp> ops[] = {{"=", CmpOp::Eq}, {"<>", CmpOp::Ne}, {"!=", CmpOp::Ne},
                                                         {"<=", CmpOp::Le}, {">=", CmpOp::Ge}, {"<", CmpOp::Lt},
                                                         {">", CmpOp::Gt}};
    for (const auto& [s, op] : ops) {
      if (accept_sym(s)) {
        c.op = op;
        c.rhs = expr();
        return c;
      }
    }
    syntax(peek().pos, "expected comparison");
  }

  std::vector<Token> t_;
  std::size_t i_ = 0;
  bool strict_;
};

}  // namespace

Query parse(std::string_view text, bool strict) { return Parser(lex(text), strict).top(); }

}  // namespace secrecy::sql
