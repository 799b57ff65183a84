#include "secrecy/oracle.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "secrecy/error.hpp"

namespace secrecy::oracle {

using Row = std::vector<std::int64_t>;

int Rows::index(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}

namespace {

std::int64_t wrap_add(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}
std::int64_t wrap_sub(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b));
}

std::int64_t cell(const Rows& t, const Row& row, const std::string& name) {
  const int i = t.index(name);
  if (i < 0) throw Error(Errc::UnknownColumn, name);
  return row[static_cast<std::size_t>(i)];
}

bool is_number(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = s[0] == '-' ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i)
    if (s[i] < '0' || s[i] > '9') return false;
  return true;
}

// Base or derived (c-K, K-c, c+K) column of a cleartext table.
std::int64_t base_value(const PlainTable& t, const Row& row, const std::string& col) {
  auto find = [&](const std::string& c) -> int {
    for (std::size_t i = 0; i < t.columns.size(); ++i)
      if (t.columns[i] == c) return static_cast<int>(i);
    return -1;
  };
  if (int i = find(col); i >= 0) return row[static_cast<std::size_t>(i)];
  for (std::size_t pos = 1; pos < col.size(); ++pos) {
    if (col[pos] != '+' && col[pos] != '-') continue;
    const int i = find(col.substr(0, pos));
    const std::string k = col.substr(pos + 1);
    if (i >= 0 && is_number(k)) {
      const std::int64_t v = row[static_cast<std::size_t>(i)], c = std::stoll(k);
      return col[pos] == '+' ? wrap_add(v, c) : wrap_sub(v, c);
    }
  }
  for (std::size_t pos = 1; pos < col.size(); ++pos) {
    if (col[pos] != '-') continue;
    const std::string k = col.substr(0, pos);
    const int i = find(col.substr(pos + 1));
    if (i >= 0 && is_number(k)) return wrap_sub(std::stoll(k), row[static_cast<std::size_t>(i)]);
  }
  throw Error(Errc::UnknownColumn, col);
}

bool before(const Row& a, const Row& b, const std::vector<int>& idx, const std::vector<bool>& desc) {
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto x = a[static_cast<std::size_t>(idx[k])], y = b[static_cast<std::size_t>(idx[k])];
    if (x != y) return desc[k] ? x > y : x < y;
  }
  return false;
}

std::vector<int> indices(const Rows& t, const std::vector<std::string>& cols) {
  std::vector<int> v;
  for (const auto& c : cols) {
    const int i = t.index(c);
    if (i < 0) throw Error(Errc::UnknownColumn, c);
    v.push_back(i);
  }
  return v;
}

Row pick(const Row& r, const std::vector<int>& idx) {
  Row out;
  for (int i : idx) out.push_back(r[static_cast<std::size_t>(i)]);
  return out;
}

struct Acc {
  std::int64_t sum = 0, cnt = 0;
  std::int64_t mn = std::numeric_limits<std::int64_t>::max();
  std::int64_t mx = std::numeric_limits<std::int64_t>::min();
};

void add_agg_names(Rows& out, const std::vector<AggSpec>& aggs) {
  for (const auto& a : aggs) {
    if (a.fn == AggFn::Avg) {
      out.names.push_back(a.out + "_sum");
      out.names.push_back(a.out + "_cnt");
    } else {
      out.names.push_back(a.out);
    }
  }
}

void emit_aggs(Row& row, const std::vector<AggSpec>& aggs, const std::vector<Acc>& acc) {
  for (std::size_t j = 0; j < aggs.size(); ++j) {
    switch (aggs[j].fn) {
      case AggFn::Count: row.push_back(acc[j].cnt); break;
      case AggFn::Sum: row.push_back(acc[j].sum); break;
      case AggFn::Min: row.push_back(acc[j].mn); break;
      case AggFn::Max: row.push_back(acc[j].mx); break;
      case AggFn::Avg:
        row.push_back(acc[j].sum);
        row.push_back(acc[j].cnt);
        break;
    }
  }
}

void feed(std::vector<Acc>& acc, const std::vector<AggSpec>& aggs, const Rows& t, const Row& r) {
  for (std::size_t j = 0; j < aggs.size(); ++j) {
    ++acc[j].cnt;
    if (aggs[j].fn == AggFn::Count) continue;
    const std::int64_t v = cell(t, r, aggs[j].col);
    acc[j].sum = wrap_add(acc[j].sum, v);
    acc[j].mn = std::min(acc[j].mn, v);
    acc[j].mx = std::max(acc[j].mx, v);
  }
}

Rows concat_names(const Rows& l, const Rows& r) {
  Rows out;
  out.names = l.names;
  out.names.insert(out.names.end(), r.names.begin(), r.names.end());
  return out;
}

}  // namespace

std::int64_t eval_expr(const Expr& e, const Rows& t, const Row& row, const Row* next) {
  switch (e.kind) {
    case Expr::Kind::Col: return cell(t, e.side == 1 && next ? *next : row, e.name);
    case Expr::Kind::Const: return static_cast<std::int64_t>(e.value);
    case Expr::Kind::Add: return wrap_add(eval_expr(*e.a, t, row, next), eval_expr(*e.b, t, row, next));
    case Expr::Kind::Sub: return wrap_sub(eval_expr(*e.a, t, row, next), eval_expr(*e.b, t, row, next));
  }
  return 0;
}

bool eval_pred(const Pred& p, const Rows& t, const Row& row, const Row* next) {
  switch (p.kind) {
    case Pred::Kind::True: return true;
    case Pred::Kind::Sign: return eval_expr(*p.lhs, t, row, next) < 0;
    case Pred::Kind::Not: return !eval_pred(p.kids.at(0), t, row, next);
    case Pred::Kind::And:
      for (const auto& k : p.kids)
        if (!eval_pred(k, t, row, next)) return false;
      return true;
    case Pred::Kind::Or:
      for (const auto& k : p.kids)
        if (eval_pred(k, t, row, next)) return true;
      return false;
    case Pred::Kind::Cmp: {
      const std::int64_t a = eval_expr(*p.lhs, t, row, next), b = eval_expr(*p.rhs, t, row, next);
      switch (p.op) {
        case CmpOp::Eq: return a == b;
        case CmpOp::Ne: return a != b;
        case CmpOp::Lt: return a < b;
        case CmpOp::Le: return a <= b;
        case CmpOp::Gt: return a > b;
        case CmpOp::Ge: return a >= b;
      }
    }
  }
  return false;
}

Rows eval(const PlanNode& n, const PlainDb& db) {
  std::vector<Rows> in;
  for (const auto& k : n.kids) in.push_back(eval(*k, db));
  Rows out;
  switch (n.op) {
    case OpKind::Scan: {
      auto it = db.find(n.table);
      if (it == db.end()) throw Error(Errc::UnknownTable, n.table);
      for (const auto& c : n.cols) out.names.push_back(n.alias + "." + c);
      for (const auto& r : it->second.rows) {
        Row o;
        for (const auto& c : n.cols) o.push_back(base_value(it->second, r, c));
        out.rows.push_back(std::move(o));
      }
      return out;
    }
    case OpKind::Select:
      out.names = in[0].names;
      for (const auto& r : in[0].rows)
        if (eval_pred(n.pred, in[0], r)) out.rows.push_back(r);
      return out;
    case OpKind::Project:
    case OpKind::Open: {
      const auto idx = indices(in[0], n.cols);
      out.names = n.cols;
      for (const auto& r : in[0].rows) out.rows.push_back(pick(r, idx));
      return out;
    }
    case OpKind::Join: {
      out = concat_names(in[0], in[1]);
      for (const auto& l : in[0].rows) {
        if (!eval_pred(n.left_pred, in[0], l)) continue;
        for (const auto& r : in[1].rows) {
          if (!eval_pred(n.right_pred, in[1], r)) continue;
          Row both = l;
          both.insert(both.end(), r.begin(), r.end());
          if (eval_pred(n.pred, out, both)) out.rows.push_back(std::move(both));
        }
      }
      return out;
    }
    case OpKind::SemiJoin: {
      const Rows both_names = concat_names(in[0], in[1]);
      out.names = in[0].names;
      if (n.partial) out.names.push_back(n.partial->out);
      for (const auto& l : in[0].rows) {
        if (!eval_pred(n.left_pred, in[0], l)) continue;
        std::int64_t matches = 0;
        for (const auto& r : in[1].rows) {
          if (!eval_pred(n.right_pred, in[1], r)) continue;
          Row both = l;
          both.insert(both.end(), r.begin(), r.end());
          if (eval_pred(n.pred, both_names, both)) ++matches;
        }
        if (matches == 0) continue;
        Row o = l;
        if (n.partial) o.push_back(matches);
        out.rows.push_back(std::move(o));
      }
      return out;
    }
    case OpKind::Sort: {
      out = in[0];
      std::vector<std::string> cols;
      std::vector<bool> desc;
      for (const auto& k : n.sort_keys) {
        cols.push_back(k.col);
        desc.push_back(k.desc);
      }
      const auto idx = indices(out, cols);
      std::stable_sort(out.rows.begin(), out.rows.end(),
                       [&](const Row& a, const Row& b) { return before(a, b, idx, desc); });
      if (n.limit && *n.limit < out.rows.size()) out.rows.resize(*n.limit);
      return out;
    }
    case OpKind::GroupBy: {
      const auto idx = indices(in[0], n.keys);
      std::vector<Row> order;
      std::map<Row, std::vector<Acc>> groups;
      for (const auto& r : in[0].rows) {
        const Row k = pick(r, idx);
        auto [it, fresh] = groups.try_emplace(k, std::vector<Acc>(n.aggs.size()));
        if (fresh) order.push_back(k);
        feed(it->second, n.aggs, in[0], r);
      }
      out.names = n.keys;
      add_agg_names(out, n.aggs);
      for (const auto& k : order) {
        Row o = k;
        emit_aggs(o, n.aggs, groups[k]);
        out.rows.push_back(std::move(o));
      }
      return out;
    }
    case OpKind::Distinct: {
      const auto idx = indices(in[0], n.keys);
      std::map<Row, bool> seen;
      out.names = n.keys;
      for (const auto& r : in[0].rows) {
        Row k = pick(r, idx);
        if (seen.emplace(k, true).second) out.rows.push_back(std::move(k));
      }
      return out;
    }
    case OpKind::Adjacent: {
      out.names = in[0].names;
      const auto& rows = in[0].rows;
      for (std::size_t i = 0; i + 1 < rows.size(); ++i)
        if (eval_pred(n.pred, in[0], rows[i], &rows[i + 1])) out.rows.push_back(rows[i]);
      return out;
    }
    case OpKind::GlobalAgg: {
      std::vector<Acc> acc(n.aggs.size());
      for (const auto& r : in[0].rows) feed(acc, n.aggs, in[0], r);
      add_agg_names(out, n.aggs);
      Row o;
      emit_aggs(o, n.aggs, acc);
      out.rows.push_back(std::move(o));
      return out;
    }
    case OpKind::Shuffle:
      return in[0];
  }
  return out;
}

std::vector<Row> sorted(std::vector<Row> rows) {
  std::sort(rows.begin(), rows.end());
  return rows;
}

std::uint64_t primitive(Prim k, std::uint64_t x, std::uint64_t y, std::uint64_t z, unsigned width) {
  const std::uint64_t mask = width >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << width) - 1;
  x &= mask;
  y &= mask;
  z &= mask;
  auto sgn = [&](std::uint64_t v) -> std::int64_t {
    if (width >= 64) return static_cast<std::int64_t>(v);
    return (v >> (width - 1)) & 1 ? static_cast<std::int64_t>(v) - (std::int64_t{1} << width)
                                  : static_cast<std::int64_t>(v);
  };
  switch (k) {
    case Prim::Xor: return x ^ y;
    case Prim::And: return x & y;
    case Prim::Or: return x | y;
    case Prim::Not: return ~x & mask;
    case Prim::Eq: return x == y ? 1 : 0;
    case Prim::Lt: return sgn(x) < sgn(y) ? 1 : 0;
    case Prim::Add: return (x + y) & mask;
    case Prim::Sub: return (x - y) & mask;
    case Prim::Mul: return (x * y) & mask;
    case Prim::Mux: return (x & 1) ? y : z;
    case Prim::Ltz: return sgn(x) < 0 ? 1 : 0;
  }
  return 0;
}

}  // namespace secrecy::oracle
