#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "secrecy/error.hpp"
#include "secrecy/oracle.hpp"

namespace secrecy::oracle {

namespace {

using sql::Cond;
using sql::Query;
using sql::SqlExpr;
using Kind = SqlExpr::Kind;
using Row = std::vector<std::int64_t>;

std::int64_t wrap_add(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}
std::int64_t wrap_sub(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b));
}

struct Col {
  std::string qual, name;
};

struct Relation {
  std::vector<Col> cols;
  std::vector<Row> rows;

  int find(const std::string& qual, const std::string& name) const {
    for (std::size_t i = 0; i < cols.size(); ++i)
      if (cols[i].name == name && (qual.empty() || cols[i].qual == qual)) return static_cast<int>(i);
    return -1;
  }
};

// A row, or a group of rows when aggregating.
struct Ctx {
  const Relation* rel = nullptr;
  const Row* row = nullptr;
  const std::vector<const Row*>* group = nullptr;
};

class Evaluator {
 public:
  explicit Evaluator(const PlainDb& db) : db_(db) {}

  Relation query(const Query& q, std::map<std::string, Query> ctes) {
    for (const auto& c : q.with) ctes[c.name] = *c.body;

    // FROM and ON, as nested loops.
    Relation cur;
    for (std::size_t i = 0; i < q.from.size(); ++i) {
      Relation r = source(q.from[i], ctes);
      Relation joined;
      joined.cols = cur.cols;
      joined.cols.insert(joined.cols.end(), r.cols.begin(), r.cols.end());
      if (i == 0) {
        joined.rows = r.rows;
      } else {
        for (const auto& a : cur.rows)
          for (const auto& b : r.rows) {
            Row ab = a;
            ab.insert(ab.end(), b.begin(), b.end());
            if (!q.on[i] || test(*q.on[i], {&joined, &ab, nullptr}, ctes)) joined.rows.push_back(std::move(ab));
          }
      }
      cur = std::move(joined);
    }
    if (q.where) {
      std::vector<Row> kept;
      for (const auto& r : cur.rows)
        if (test(*q.where, {&cur, &r, nullptr}, ctes)) kept.push_back(r);
      cur.rows = std::move(kept);
    }

    // ROW_NUMBER items become extra columns before projection.
    for (const auto& item : q.select)
      if (item.expr->kind == Kind::RowNumber) number_rows(cur, *item.expr, item.alias);

    std::vector<const SqlExpr*> aggs;
    for (const auto& i : q.select) collect(*i.expr, aggs);
    if (q.having) collect(*q.having, aggs, &q);
    for (const auto& o : q.order_by) collect(*resolve_alias(o.expr, q, cur), aggs);
    const bool grouped = !q.group_by.empty() || !aggs.empty();

    // Output rows plus, per output row, the context ORDER BY is evaluated in.
    struct Out {
      Row values;
      Row order;
    };
    std::vector<Out> out;
    auto emit = [&](const Ctx& ctx) {
      Out o;
      for (const auto& i : q.select) o.values.push_back(i.expr->kind == Kind::RowNumber ? value_of_alias(ctx, i.alias) : value(*i.expr, ctx));
      for (const auto& ob : q.order_by) o.order.push_back(value(*resolve_alias(ob.expr, q, cur), ctx));
      out.push_back(std::move(o));
    };

    std::vector<std::vector<const Row*>> groups;
    if (grouped) {
      std::vector<Row> keys;
      for (const auto& r : cur.rows) {
        Row k;
        for (const auto& g : q.group_by) {
          if (g->kind == Kind::Concat)
            for (const auto& a : g->args) k.push_back(value(*a, {&cur, &r, nullptr}));
          else
            k.push_back(value(*g, {&cur, &r, nullptr}));
        }
        auto it = std::find(keys.begin(), keys.end(), k);
        if (it == keys.end()) {
          keys.push_back(k);
          groups.emplace_back();
          groups.back().push_back(&r);
        } else {
          groups[static_cast<std::size_t>(it - keys.begin())].push_back(&r);
        }
      }
      if (q.group_by.empty() && groups.empty()) groups.emplace_back();  // a global aggregate of nothing
      for (const auto& g : groups) {
        Ctx ctx{&cur, g.empty() ? nullptr : g.front(), &g};
        if (q.having && !test(resolve_alias_cond(*q.having, q, cur), ctx, ctes)) continue;
        emit(ctx);
      }
    } else {
      for (const auto& r : cur.rows) emit({&cur, &r, nullptr});
    }

    if (q.distinct) {
      std::vector<Out> uniq;
      for (auto& o : out)
        if (std::none_of(uniq.begin(), uniq.end(), [&](const Out& u) { return u.values == o.values; }))
          uniq.push_back(std::move(o));
      out = std::move(uniq);
    }
    if (!q.order_by.empty()) {
      std::stable_sort(out.begin(), out.end(), [&](const Out& a, const Out& b) {
        for (std::size_t k = 0; k < q.order_by.size(); ++k) {
          if (a.order[k] == b.order[k]) continue;
          return q.order_by[k].desc ? a.order[k] > b.order[k] : a.order[k] < b.order[k];
        }
        return a.values < b.values;
      });
      if (q.limit && out.size() > *q.limit) out.resize(*q.limit);
    }

    Relation res;
    for (const auto& i : q.select) res.cols.push_back({"", sql::output_name(i)});
    for (auto& o : out) res.rows.push_back(std::move(o.values));
    return res;
  }

 private:
  Relation source(const sql::TableRef& ref, const std::map<std::string, Query>& ctes) {
    Relation r;
    if (ref.sub || ctes.count(ref.table)) {
      r = query(ref.sub ? *ref.sub : ctes.at(ref.table), ctes);
      for (auto& c : r.cols) c.qual = ref.alias;
      return r;
    }
    auto it = db_.find(ref.table);
    if (it == db_.end()) throw Error(Errc::UnknownTable, ref.table);
    for (const auto& c : it->second.columns) r.cols.push_back({ref.alias, c});
    r.rows = it->second.rows;
    return r;
  }

  void number_rows(Relation& rel, const SqlExpr& w, const std::string& alias) {
    std::vector<std::size_t> order(rel.rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto keys = [&](std::size_t i) {
      Row k;
      for (const auto& p : w.partition_by) k.push_back(value(*p, {&rel, &rel.rows[i], nullptr}));
      for (const auto& o : w.order_by) {
        const std::int64_t v = value(*o.expr, {&rel, &rel.rows[i], nullptr});
        k.push_back(o.desc ? wrap_sub(0, v) : v);
      }
      return k;
    };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys(a) < keys(b); });
    std::vector<std::int64_t> num(rel.rows.size());
    Row prev_part;
    std::int64_t n = 0;
    for (std::size_t i : order) {
      Row part;
      for (const auto& p : w.partition_by) part.push_back(value(*p, {&rel, &rel.rows[i], nullptr}));
      n = (n > 0 && part == prev_part) ? n + 1 : 1;
      prev_part = part;
      num[i] = n;
    }
    rel.cols.push_back({"", alias});
    for (std::size_t i = 0; i < rel.rows.size(); ++i) rel.rows[i].push_back(num[i]);
  }

  static std::int64_t value_of_alias(const Ctx& ctx, const std::string& alias) {
    return (*ctx.row)[static_cast<std::size_t>(ctx.rel->find("", alias))];
  }

  static sql::SqlExprPtr resolve_alias(const sql::SqlExprPtr& e, const Query& q, const Relation& rel) {
    if (e->kind != Kind::Column || !e->qualifier.empty() || rel.find("", e->name) >= 0) return e;
    for (const auto& i : q.select)
      if (i.alias == e->name) return i.expr;
    return e;
  }

  static Cond resolve_alias_cond(const Cond& c, const Query& q, const Relation& rel) {
    Cond out = c;
    if (out.lhs) out.lhs = resolve_alias(out.lhs, q, rel);
    if (out.rhs) out.rhs = resolve_alias(out.rhs, q, rel);
    for (auto& k : out.kids) k = resolve_alias_cond(k, q, rel);
    return out;
  }

  static void collect(const SqlExpr& e, std::vector<const SqlExpr*>& out) {
    if (e.kind == Kind::Aggregate) out.push_back(&e);
    for (const auto& a : e.args) collect(*a, out);
  }
  static void collect(const Cond& c, std::vector<const SqlExpr*>& out, const Query* q) {
    if (c.lhs) collect(*c.lhs, out);
    if (c.rhs) collect(*c.rhs, out);
    for (const auto& k : c.kids) collect(k, out, q);
    // HAVING may name an aggregate by its select alias.
    for (const auto* side : {&c.lhs, &c.rhs}) {
      if (!*side || (*side)->kind != Kind::Column || !(*side)->qualifier.empty()) continue;
      for (const auto& i : q->select)
        if (i.alias == (*side)->name) collect(*i.expr, out);
    }
  }

  std::int64_t aggregate(const SqlExpr& e, const Ctx& ctx) {
    if (!ctx.group) throw Error(Errc::UnsupportedFeature, "aggregate outside a group");
    const auto& g = *ctx.group;
    std::vector<std::int64_t> vals;
    for (const Row* r : g) vals.push_back(e.args.empty() ? 1 : value(*e.args[0], {ctx.rel, r, nullptr}));
    if (e.distinct) {
      std::sort(vals.begin(), vals.end());
      vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    }
    std::int64_t sum = 0;
    for (auto v : vals) sum = wrap_add(sum, v);
    switch (e.fn) {
      case AggFn::Count: return static_cast<std::int64_t>(vals.size());
      case AggFn::Sum: return sum;
      case AggFn::Avg: return vals.empty() ? 0 : sum / static_cast<std::int64_t>(vals.size());
      case AggFn::Min: return vals.empty() ? INT64_MAX : *std::min_element(vals.begin(), vals.end());
      case AggFn::Max: return vals.empty() ? INT64_MIN : *std::max_element(vals.begin(), vals.end());
    }
    return 0;
  }

  std::int64_t value(const SqlExpr& e, const Ctx& ctx) {
    switch (e.kind) {
      case Kind::Int: return e.value;
      case Kind::String: return static_cast<std::int64_t>(sql::hash_string(e.text));
      case Kind::Add: return wrap_add(value(*e.args[0], ctx), value(*e.args[1], ctx));
      case Kind::Sub: return wrap_sub(value(*e.args[0], ctx), value(*e.args[1], ctx));
      case Kind::Aggregate: return aggregate(e, ctx);
      case Kind::Column: {
        const int i = ctx.rel->find(e.qualifier, e.name);
        if (i < 0) throw Error(Errc::UnknownColumn, to_string(e));
        if (!ctx.row) throw Error(Errc::UnsupportedFeature, "column of an empty group");
        return (*ctx.row)[static_cast<std::size_t>(i)];
      }
      default: throw Error(Errc::UnsupportedFeature, to_string(e));
    }
  }

  bool test(const Cond& c, const Ctx& ctx, const std::map<std::string, Query>& ctes) {
    switch (c.kind) {
      case Cond::Kind::Cmp: {
        const std::int64_t a = value(*c.lhs, ctx), b = value(*c.rhs, ctx);
        switch (c.op) {
          case CmpOp::Eq: return a == b;
          case CmpOp::Ne: return a != b;
          case CmpOp::Lt: return a < b;
          case CmpOp::Le: return a <= b;
          case CmpOp::Gt: return a > b;
          case CmpOp::Ge: return a >= b;
        }
        return false;
      }
      case Cond::Kind::And:
        return std::all_of(c.kids.begin(), c.kids.end(), [&](const Cond& k) { return test(k, ctx, ctes); });
      case Cond::Kind::Or:
        return std::any_of(c.kids.begin(), c.kids.end(), [&](const Cond& k) { return test(k, ctx, ctes); });
      case Cond::Kind::Not: return !test(c.kids[0], ctx, ctes);
      case Cond::Kind::In: {
        auto [it, fresh] = in_sets_.try_emplace(c.sub.get());
        if (fresh)
          for (const auto& row : query(*c.sub, ctes).rows) it->second.insert(row.at(0));
        return it->second.count(value(*c.lhs, ctx)) > 0;
      }
    }
    return false;
  }

  const PlainDb& db_;
  std::map<const Query*, std::set<std::int64_t>> in_sets_;
};

}  // namespace

Rows eval(const sql::Query& q, const PlainDb& db) {
  Evaluator ev(db);
  Relation r = ev.query(q, {});
  Rows out;
  for (const auto& c : r.cols) out.names.push_back(c.name);
  out.rows = std::move(r.rows);
  return out;
}

}  // namespace secrecy::oracle
