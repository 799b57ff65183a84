#include "secrecy/lower.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "secrecy/error.hpp"

namespace secrecy {

namespace {

using sql::Cond;
using sql::Query;
using sql::SqlExpr;
using Kind = SqlExpr::Kind;

struct Binding {
  std::string qual, name;  // as written in the query
  std::string col;         // plan column
  int side = 0;
  bool safe = false;  // group key, aggregate or DISTINCT output
};

struct Scope {
  std::vector<Binding> binds;
  std::map<std::string, std::string> aggs;  // aggregate text -> plan column

  const Binding& resolve(const SqlExpr& e) const {
    const Binding* hit = nullptr;
    for (const auto& b : binds) {
      if (b.name != e.name || (!e.qualifier.empty() && b.qual != e.qualifier)) continue;
      if (hit && (hit->col != b.col || hit->side != b.side)) throw Error(Errc::UnknownColumn, "ambiguous column " + to_string(e));
      hit = &b;
    }
    if (!hit) throw Error(Errc::UnknownColumn, to_string(e));
    return *hit;
  }
  bool has(const SqlExpr& e) const {
    return std::any_of(binds.begin(), binds.end(), [&](const Binding& b) {
      return b.name == e.name && (e.qualifier.empty() || b.qual == e.qualifier);
    });
  }
};

struct Rel {
  PlanPtr plan;
  std::vector<OutputColumn> out;
  std::vector<bool> safe;
  bool single_row = false;
  bool ordered = false;
};

[[noreturn]] void unsupported(const std::string& what) { throw Error(Errc::UnsupportedFeature, what); }

void walk(const SqlExpr& e, const std::function<void(const SqlExpr&)>& f) {
  f(e);
  for (const auto& a : e.args) walk(*a, f);
  for (const auto& a : e.partition_by) walk(*a, f);
  for (const auto& o : e.order_by) walk(*o.expr, f);
}

void walk(const Cond& c, const std::function<void(const SqlExpr&)>& f) {
  if (c.lhs) walk(*c.lhs, f);
  if (c.rhs) walk(*c.rhs, f);
  for (const auto& k : c.kids) walk(k, f);
}

// Every expression of q outside its subqueries.
void walk(const Query& q, const std::function<void(const SqlExpr&)>& f) {
  for (const auto& i : q.select) walk(*i.expr, f);
  for (const auto& o : q.on)
    if (o) walk(*o, f);
  if (q.where) walk(*q.where, f);
  for (const auto& g : q.group_by) walk(*g, f);
  if (q.having) walk(*q.having, f);
  for (const auto& o : q.order_by) walk(*o.expr, f);
}

bool is_column(const sql::SqlExprPtr& e) { return e && e->kind == Kind::Column; }

bool flagged(const PlanPtr& p, const Catalog& cat) { return infer_shape(*p, cat).flag_count() > 0; }

PlanPtr distinct_of(PlanPtr in, std::vector<std::string> keys, const Catalog& cat) {
  PlanNode n = *make_distinct(in, std::move(keys));
  n.mode = flagged(in, cat) ? DistinctMode::Sequential : DistinctMode::Fused;
  return std::make_shared<const PlanNode>(std::move(n));
}

class Lowerer {
 public:
  Lowerer(const Catalog& cat, bool strict) : cat_(cat), strict_(strict) {}

  Rel select(const Query& q, std::map<std::string, Query> ctes) {
    for (const auto& c : q.with) ctes[c.name] = *c.body;
    if (q.star) unsupported("SELECT *");
    Scope scope;
    PlanPtr cur;
    if (window_pattern(q, ctes))
      cur = lower_window(q, ctes, scope);
    else
      cur = lower_from(q, ctes, scope);
    return finish(q, cur, scope);
  }

 private:
  // FROM, join conditions, WHERE and IN.
  PlanPtr lower_from(const Query& q, const std::map<std::string, Query>& ctes, Scope& scope) {
    std::set<std::pair<std::string, std::string>> refs;
    walk(q, [&](const SqlExpr& e) {
      if (e.kind == Kind::Column) refs.insert({e.qualifier, e.name});
    });
    if (q.where)
      for (const auto& c : q.where->conjuncts())
        if (c.kind == Cond::Kind::In) walk(*c.lhs, [&](const SqlExpr& e) {
            if (e.kind == Kind::Column) refs.insert({e.qualifier, e.name});
          });

    struct Item {
      PlanPtr plan;
      std::vector<Binding> binds;
    };
    std::vector<Item> items;
    for (const auto& ref : q.from) {
      Item it;
      if (ref.sub || ctes.count(ref.table)) {
        Rel sub = select(ref.sub ? *ref.sub : ctes.at(ref.table), ctes);
        it.plan = sub.plan;
        for (std::size_t i = 0; i < sub.out.size(); ++i) {
          if (sub.out[i].average) unsupported("AVG inside a subquery");
          it.binds.push_back({ref.alias, sub.out[i].name, sub.out[i].opened[0], 0, sub.safe[i]});
        }
      } else {
        const TableInfo& t = cat_.at(ref.table);
        std::vector<std::string> cols;
        for (const auto& c : t.columns)
          if (refs.count({ref.alias, c}) || refs.count({"", c})) cols.push_back(c);
        if (cols.empty()) cols.push_back(t.columns.at(0));
        it.plan = make_scan(ref.table, ref.alias, cols);
        for (const auto& c : cols) it.binds.push_back({ref.alias, c, ref.alias + "." + c});
      }
      items.push_back(std::move(it));
    }

    // Which FROM items a condition touches.
    auto touches = [&](const Cond& c) {
      std::set<std::size_t> out;
      walk(c, [&](const SqlExpr& e) {
        if (e.kind != Kind::Column) return;
        std::size_t hits = 0;
        for (std::size_t i = 0; i < items.size(); ++i) {
          Scope s{items[i].binds, {}};
          if (s.has(e)) {
            out.insert(i);
            ++hits;
          }
        }
        if (hits == 0) throw Error(Errc::UnknownColumn, to_string(e));
        if (hits > 1) throw Error(Errc::UnknownColumn, "ambiguous column " + to_string(e));
      });
      return out;
    };

    std::vector<std::vector<Cond>> local(items.size());
    std::vector<std::pair<std::size_t, Cond>> cross;  // (last item touched, condition)
    std::vector<Cond> in_conds, residual;
    if (q.where) {
      for (const auto& c : q.where->conjuncts()) {
        if (c.kind == Cond::Kind::In) {
          in_conds.push_back(c);
          continue;
        }
        const auto t = touches(c);
        if (t.empty())
          residual.push_back(c);
        else if (t.size() == 1)
          local[*t.begin()].push_back(c);
        else
          cross.emplace_back(*t.rbegin(), c);
      }
    }
    for (std::size_t i = 1; i < items.size(); ++i)
      if (q.on[i])
        for (const auto& c : q.on[i]->conjuncts()) {
          const auto t = touches(c);
          cross.emplace_back(t.empty() ? i : std::max(i, *t.rbegin()), c);
        }

    PlanPtr cur;
    for (std::size_t i = 0; i < items.size(); ++i) {
      PlanPtr p = items[i].plan;
      Scope s{items[i].binds, {}};
      if (!local[i].empty()) p = make_select(p, conv(local[i], s));
      scope.binds.insert(scope.binds.end(), items[i].binds.begin(), items[i].binds.end());
      if (i == 0) {
        cur = p;
        continue;
      }
      std::vector<Cond> theta;
      for (const auto& [last, c] : cross)
        if (last == i) theta.push_back(c);
      cur = make_join(cur, p, theta.empty() ? Pred::truth() : conv(theta, scope));
    }
    for (const auto& c : in_conds) {
      Rel sub = select(*c.sub, ctes);
      if (sub.out.size() != 1 || sub.out[0].average) unsupported("IN subquery must return one column");
      const Pred eq = Pred::cmp(CmpOp::Eq, conv(*c.lhs, scope), Expr::col(sub.out[0].opened[0]));
      cur = make_semijoin(cur, sub.plan, eq);
    }
    if (!residual.empty()) cur = make_select(cur, conv(residual, scope));
    return cur;
  }

  static const Query::Item* row_number_item(const Query& body) {
    for (const auto& i : body.select)
      if (i.expr->kind == Kind::RowNumber) return &i;
    return nullptr;
  }

  bool window_pattern(const Query& q, const std::map<std::string, Query>& ctes) const {
    bool any = false;
    for (const auto& r : q.from)
      if (!r.sub && ctes.count(r.table) && row_number_item(ctes.at(r.table))) any = true;
    if (!any) return false;
    if (q.from.size() != 2 || q.from[0].table != q.from[1].table || q.from[0].sub || q.from[1].sub)
      unsupported("ROW_NUMBER outside a self-join on consecutive rows");
    return true;
  }

  // WITH w AS (SELECT ..., ROW_NUMBER() OVER (PARTITION BY p ORDER BY t) AS rn FROM T WHERE phi)
  // SELECT ... FROM w a JOIN w b ON ... WHERE b.rn = a.rn + 1 AND ...
  // compares each row with the next one of its partition.
  PlanPtr lower_window(const Query& q, const std::map<std::string, Query>& ctes, Scope& scope) {
    const std::string w = q.from[0].table;
    const Query& body = ctes.at(w);
    const Query::Item* rn_item = row_number_item(body);
    if (body.from.size() != 1 || body.from[0].sub || ctes.count(body.from[0].table) || !body.group_by.empty() ||
        body.having || body.distinct || !body.order_by.empty() || body.limit || rn_item->alias.empty())
      unsupported("ROW_NUMBER over anything but one filtered table");
    const SqlExpr& rn = *rn_item->expr;
    for (const auto& o : rn.order_by)
      if (o.desc) unsupported("descending ROW_NUMBER order");

    const TableInfo& t = cat_.at(body.from[0].table);
    std::set<std::string> need;
    walk(body, [&](const SqlExpr& e) {
      if (e.kind == Kind::Column) need.insert(e.name);
    });
    std::vector<std::string> cols;
    for (const auto& c : t.columns)
      if (need.count(c)) cols.push_back(c);
    PlanPtr cur = make_scan(body.from[0].table, w, cols);
    Scope inner;
    for (const auto& c : cols) inner.binds.push_back({body.from[0].alias, c, w + "." + c});
    if (body.where) cur = make_select(cur, conv(body.where->conjuncts(), inner));
    std::vector<SortKey> keys;
    for (const auto& p : rn.partition_by) keys.push_back({conv_col(*p, inner), false});
    for (const auto& o : rn.order_by) keys.push_back({conv_col(*o.expr, inner), false});
    PlanNode sort = *make_sort(cur, keys);
    sort.flag_unit = flagged(cur, cat_);
    cur = std::make_shared<const PlanNode>(std::move(sort));

    // Conditions of the self-join; find which alias is the later row.
    std::vector<Cond> conds;
    if (q.on[1])
      for (const auto& c : q.on[1]->conjuncts()) conds.push_back(c);
    if (q.where)
      for (const auto& c : q.where->conjuncts()) conds.push_back(c);
    const std::string& rn_name = rn_item->alias;
    auto rn_of = [&](const sql::SqlExprPtr& e) -> std::string {
      return is_column(e) && e->name == rn_name ? e->qualifier : std::string();
    };
    auto plus_one = [&](const sql::SqlExprPtr& e) -> std::string {
      if (e->kind != Kind::Add || e->args[1]->kind != Kind::Int || e->args[1]->value != 1) return {};
      return rn_of(e->args[0]);
    };
    std::string earlier, later;
    std::vector<Cond> rest;
    for (const auto& c : conds) {
      if (c.kind == Cond::Kind::Cmp && c.op == CmpOp::Eq && earlier.empty()) {
        if (!rn_of(c.lhs).empty() && !plus_one(c.rhs).empty()) {
          later = rn_of(c.lhs);
          earlier = plus_one(c.rhs);
          continue;
        }
        if (!rn_of(c.rhs).empty() && !plus_one(c.lhs).empty()) {
          later = rn_of(c.rhs);
          earlier = plus_one(c.lhs);
          continue;
        }
      }
      rest.push_back(c);
    }
    if (earlier.empty() || earlier == later) unsupported("ROW_NUMBER join without a consecutive-row condition");
    for (const auto& c : rest)
      walk(c, [&](const SqlExpr& e) {
        if (e.kind == Kind::Column && e.name == rn_name) unsupported("ROW_NUMBER compared other than by succession");
      });

    Scope pair;
    for (const auto& item : body.select) {
      if (&item == rn_item) continue;
      if (!is_column(item.expr)) unsupported("computed column in a ROW_NUMBER query");
      const std::string name = sql::output_name(item);
      const std::string col = conv_col(*item.expr, inner);
      pair.binds.push_back({earlier, name, col, 0});
      pair.binds.push_back({later, name, col, 1});
    }
    for (const auto& p : rn.partition_by) {
      const std::string col = conv_col(*p, inner);
      const bool joined = std::any_of(rest.begin(), rest.end(), [&](const Cond& c) {
        if (c.kind != Cond::Kind::Cmp || c.op != CmpOp::Eq || !is_column(c.lhs) || !is_column(c.rhs)) return false;
        const auto& a = pair.resolve(*c.lhs);
        const auto& b = pair.resolve(*c.rhs);
        return a.col == col && b.col == col && a.side != b.side;
      });
      if (!joined) unsupported("ROW_NUMBER join must equate the partition columns");
    }
    cur = make_adjacent(cur, conv(rest, pair));

    // Downstream sees the earlier row; partition columns are equal on both.
    for (const auto& b : pair.binds) {
      if (b.side == 0) {
        scope.binds.push_back(b);
        continue;
      }
      const bool part = std::any_of(rn.partition_by.begin(), rn.partition_by.end(),
                                    [&](const sql::SqlExprPtr& p) { return conv_col(*p, inner) == b.col; });
      if (part) scope.binds.push_back({b.qual, b.name, b.col, 0});
    }
    return cur;
  }

  // GROUP BY / aggregates, HAVING, DISTINCT, ORDER BY, output columns.
  Rel finish(const Query& q, PlanPtr cur, Scope scope) {
    Rel rel;
    // Select aliases usable in HAVING and ORDER BY.
    auto dealias = [&](const sql::SqlExprPtr& e) -> sql::SqlExprPtr {
      if (!is_column(e) || !e->qualifier.empty() || scope.has(*e)) return e;
      for (const auto& i : q.select)
        if (i.alias == e->name) return i.expr;
      return e;
    };

    std::vector<SqlExpr> aggs;
    auto collect = [&](const SqlExpr& e) {
      if (e.kind != Kind::Aggregate) return;
      const std::string text = to_string(e);
      if (std::none_of(aggs.begin(), aggs.end(), [&](const SqlExpr& a) { return to_string(a) == text; }))
        aggs.push_back(e);
    };
    for (const auto& i : q.select) walk(*i.expr, collect);
    if (q.having) walk(*q.having, [&](const SqlExpr& e) { walk(*dealias(std::make_shared<SqlExpr>(e)), collect); });
    for (const auto& o : q.order_by) walk(*dealias(o.expr), collect);

    if (!q.group_by.empty() || !aggs.empty()) {
      std::vector<std::string> keys;
      for (const auto& g : q.group_by) {
        std::vector<sql::SqlExprPtr> parts = g->kind == Kind::Concat ? g->args : std::vector<sql::SqlExprPtr>{g};
        for (const auto& p : parts) {
          if (!is_column(p)) unsupported("GROUP BY on an expression");
          keys.push_back(scope.resolve(*p).col);
        }
      }
      Scope grouped;
      for (const auto& b : scope.binds)
        if (std::find(keys.begin(), keys.end(), b.col) != keys.end()) {
          Binding k = b;
          k.safe = true;
          grouped.binds.push_back(k);
        }
      const bool counts_distinct = std::any_of(aggs.begin(), aggs.end(), [](const SqlExpr& a) { return a.distinct; });
      if (counts_distinct) {
        if (!keys.empty() || aggs.size() != 1) unsupported("COUNT(DISTINCT) with grouping or other aggregates");
        const SqlExpr& a = aggs[0];
        if (!is_column(a.args[0])) unsupported("COUNT(DISTINCT) of an expression");
        const std::string out = fresh(alias_of(q, a, "count"));
        cur = distinct_of(cur, {scope.resolve(*a.args[0]).col}, cat_);
        cur = make_global_agg(cur, {{AggFn::Count, "", out}});
        grouped.aggs[to_string(a)] = out;
      } else {
        std::vector<AggSpec> specs;
        for (const SqlExpr& a : aggs) {
          AggSpec s;
          s.fn = a.fn;
          std::string base = to_string(a.fn);
          std::transform(base.begin(), base.end(), base.begin(), [](unsigned char c) { return std::tolower(c); });
          if (!a.args.empty()) {
            if (!is_column(a.args[0])) unsupported("aggregate of an expression");
            s.col = scope.resolve(*a.args[0]).col;
            base += "_" + a.args[0]->name;
          }
          s.out = fresh(alias_of(q, a, base));
          grouped.aggs[to_string(a)] = s.out;
          specs.push_back(s);
        }
        if (keys.empty()) {
          cur = make_global_agg(cur, specs);
          rel.single_row = true;
        } else {
          cur = make_groupby(cur, keys, specs);
        }
      }
      if (counts_distinct) rel.single_row = true;
      scope = grouped;
      if (q.having) cur = make_select(cur, conv(dealias_cond(*q.having, dealias), scope));
      std::function<void(const SqlExpr&)> grouped_only = [&](const SqlExpr& e) {
        if (e.kind == Kind::Aggregate) return;
        if (e.kind == Kind::Column && !scope.has(e))
          unsupported("column " + to_string(e) + " is neither grouped nor aggregated");
        for (const auto& a : e.args) grouped_only(*a);
      };
      for (const auto& i : q.select) grouped_only(*i.expr);
    } else if (q.having) {
      unsupported("HAVING without aggregation");
    }

    for (const auto& i : q.select) {
      OutputColumn oc;
      oc.name = sql::output_name(i);
      bool safe = q.distinct;
      if (i.expr->kind == Kind::Column) {
        const Binding& b = scope.resolve(*i.expr);
        if (b.side != 0) unsupported("output of the later row");
        oc.opened = {b.col};
        safe = safe || b.safe;
      } else if (i.expr->kind == Kind::Aggregate) {
        const std::string col = scope.aggs.at(to_string(*i.expr));
        oc.average = i.expr->fn == AggFn::Avg;
        oc.opened = oc.average ? agg_outputs({AggFn::Avg, "", col}) : std::vector<std::string>{col};
        safe = true;
      } else {
        unsupported("computed select item " + to_string(*i.expr));
      }
      rel.out.push_back(oc);
      rel.safe.push_back(safe);
    }

    if (q.distinct) {
      if (rel.single_row || std::any_of(rel.out.begin(), rel.out.end(), [](const OutputColumn& o) { return o.average; }))
        unsupported("DISTINCT over aggregates");
      std::vector<std::string> keys;
      for (const auto& o : rel.out)
        if (std::find(keys.begin(), keys.end(), o.opened[0]) == keys.end()) keys.push_back(o.opened[0]);
      cur = distinct_of(cur, keys, cat_);
    }

    if (!q.order_by.empty()) {
      std::vector<SortKey> keys;
      auto add = [&](const std::string& c, bool desc) {
        if (std::none_of(keys.begin(), keys.end(), [&](const SortKey& k) { return k.col == c; })) keys.push_back({c, desc});
      };
      for (const auto& o : q.order_by) {
        const sql::SqlExprPtr e = dealias(o.expr);
        if (e->kind == Kind::Aggregate)
          add(scope.aggs.at(to_string(*e)), o.desc);
        else if (is_column(e))
          add(scope.resolve(*e).col, o.desc);
        else
          unsupported("ORDER BY an expression");
      }
      for (const auto& oc : rel.out)
        for (const auto& c : oc.opened) add(c, false);
      PlanNode s = *make_sort(cur, keys, q.limit);
      s.flag_unit = flagged(cur, cat_);
      cur = std::make_shared<const PlanNode>(std::move(s));
      rel.ordered = true;
    } else if (q.limit) {
      unsupported("LIMIT without ORDER BY");
    }
    rel.plan = cur;
    return rel;
  }

  static std::string alias_of(const Query& q, const SqlExpr& a, const std::string& fallback) {
    for (const auto& i : q.select)
      if (!i.alias.empty() && to_string(*i.expr) == to_string(a)) return i.alias;
    return fallback;
  }

  std::string fresh(const std::string& base) {
    std::string name = base;
    for (int k = 2; !used_.insert(name).second; ++k) name = base + "_" + std::to_string(k);
    return name;
  }

  static Cond dealias_cond(const Cond& c, const std::function<sql::SqlExprPtr(const sql::SqlExprPtr&)>& f) {
    Cond out = c;
    if (out.lhs) out.lhs = f(out.lhs);
    if (out.rhs) out.rhs = f(out.rhs);
    for (auto& k : out.kids) k = dealias_cond(k, f);
    return out;
  }

  std::string conv_col(const SqlExpr& e, const Scope& s) const {
    if (e.kind != Kind::Column) unsupported("expected a column, got " + to_string(e));
    return s.resolve(e).col;
  }

  ExprPtr conv(const SqlExpr& e, const Scope& s) const {
    switch (e.kind) {
      case Kind::Column: {
        const Binding& b = s.resolve(e);
        return Expr::col(b.col, b.side);
      }
      case Kind::Int: return Expr::constant(static_cast<Word>(e.value));
      case Kind::String: return Expr::constant(sql::hash_string(e.text));
      case Kind::Add: return Expr::add(conv(*e.args[0], s), conv(*e.args[1], s));
      case Kind::Sub: return Expr::sub(conv(*e.args[0], s), conv(*e.args[1], s));
      case Kind::Aggregate: {
        auto it = s.aggs.find(to_string(e));
        if (it == s.aggs.end()) unsupported("aggregate outside SELECT, HAVING or ORDER BY");
        return Expr::col(it->second);
      }
      default: unsupported(to_string(e) + " inside a condition");
    }
  }

  Pred conv(const Cond& c, const Scope& s) const {
    switch (c.kind) {
      case Cond::Kind::Cmp: return Pred::cmp(c.op, conv(*c.lhs, s), conv(*c.rhs, s));
      case Cond::Kind::And:
      case Cond::Kind::Or: {
        std::vector<Pred> ks;
        for (const auto& k : c.kids) ks.push_back(conv(k, s));
        return c.kind == Cond::Kind::And ? Pred::conj(std::move(ks)) : Pred::disj(std::move(ks));
      }
      case Cond::Kind::Not: return Pred::negate(conv(c.kids[0], s));
      case Cond::Kind::In: unsupported("IN below OR or NOT");
    }
    return {};
  }

  Pred conv(const std::vector<Cond>& cs, const Scope& s) const {
    std::vector<Pred> ps;
    for (const auto& c : cs) ps.push_back(conv(c, s));
    return ps.size() == 1 ? ps[0] : Pred::conj(std::move(ps));
  }

  const Catalog& cat_;
  bool strict_;
  std::set<std::string> used_;
};

}  // namespace

Lowered lower(const sql::Query& q, const Catalog& cat, bool strict) {
  Lowerer l(cat, strict);
  Rel rel = l.select(q, {});
  if (strict)
    for (std::size_t i = 0; i < rel.out.size(); ++i)
      if (!rel.safe[i]) unsupported("strict mode: " + rel.out[i].name + " would open raw rows");
  std::vector<std::string> cols;
  for (const auto& o : rel.out)
    for (const auto& c : o.opened)
      if (std::find(cols.begin(), cols.end(), c) == cols.end()) cols.push_back(c);
  PlanPtr p = rel.plan;
  if (!rel.ordered && !rel.single_row) p = make_shuffle(p);
  return {make_open(p, cols), rel.out};
}

std::vector<std::vector<std::int64_t>> result_rows(const Lowered& l, const std::vector<std::string>& names,
                                                   const std::vector<std::vector<std::int64_t>>& rows) {
  auto at = [&](const std::string& c) {
    auto it = std::find(names.begin(), names.end(), c);
    if (it == names.end()) throw Error(Errc::SchemaMismatch, "opened result lacks " + c);
    return static_cast<std::size_t>(it - names.begin());
  };
  std::vector<std::vector<std::int64_t>> out;
  for (const auto& r : rows) {
    std::vector<std::int64_t> row;
    for (const auto& oc : l.columns) {
      if (!oc.average) {
        row.push_back(r[at(oc.opened[0])]);
        continue;
      }
      const std::int64_t cnt = r[at(oc.opened[1])];
      row.push_back(cnt == 0 ? 0 : r[at(oc.opened[0])] / cnt);
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace secrecy
