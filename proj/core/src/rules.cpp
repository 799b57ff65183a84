#include <algorithm>

#include "secrecy/error.hpp"
#include "secrecy/planner.hpp"

namespace secrecy::rules {

namespace {

PlanPtr node(PlanNode n) { return std::make_shared<const PlanNode>(std::move(n)); }

PlanPtr with_kid(const PlanNode& n, PlanPtr kid) { return with_kids(n, {std::move(kid)}); }

std::set<std::string> names_of(const Shape& s) {
  std::set<std::string> out;
  for (const auto& c : s.cols) out.insert(c.name);
  return out;
}

bool subset(const std::set<std::string>& a, const std::set<std::string>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

bool has_prefix(const std::vector<std::string>& v, const std::vector<std::string>& prefix) {
  return v.size() >= prefix.size() && std::equal(prefix.begin(), prefix.end(), v.begin());
}

// Columns c with a conjunct c = constant.
std::vector<std::string> const_eq_columns(const Pred& p) {
  std::vector<std::string> out;
  for (const auto& c : p.conjuncts()) {
    if (c.kind != Pred::Kind::Cmp || c.op != CmpOp::Eq) continue;
    const Expr& l = *c.lhs;
    const Expr& r = *c.rhs;
    if (l.kind == Expr::Kind::Col && r.kind == Expr::Kind::Const) out.push_back(l.name);
    if (r.kind == Expr::Kind::Col && l.kind == Expr::Kind::Const) out.push_back(r.name);
  }
  return out;
}

bool all_const_eq(const Pred& p) { return !p.is_true() && const_eq_columns(p).size() == p.conjuncts().size(); }

PlanPtr sort_on(PlanPtr in, const std::vector<std::string>& keys, bool mask = false) {
  std::vector<SortKey> ks;
  for (const auto& k : keys) ks.push_back({k, false});
  PlanNode s = *make_sort(std::move(in), std::move(ks));
  s.mask_keys = mask;
  return node(std::move(s));
}

// Rebuilds a Select / SemiJoin chain over a new bottom input.
PlanPtr rebuild_chain(const std::vector<PlanPtr>& chain, PlanPtr bottom) {
  PlanPtr cur = std::move(bottom);
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    std::vector<PlanPtr> kids = (*it)->kids;
    kids[0] = cur;
    cur = with_kids(**it, std::move(kids));
  }
  return cur;
}

// Select and SemiJoin nodes on the left spine below p, top first.
std::vector<PlanPtr> filter_chain(const PlanPtr& p, PlanPtr& bottom) {
  std::vector<PlanPtr> chain;
  PlanPtr cur = p;
  while (cur->op == OpKind::Select || cur->op == OpKind::SemiJoin) {
    chain.push_back(cur);
    cur = cur->kids[0];
  }
  bottom = cur;
  return chain;
}

bool flags_uniform(const PlanNode& p, const std::set<std::string>& keys, const Catalog& cat) {
  switch (p.op) {
    case OpKind::Scan:
      return true;  // padding rows carry sentinel keys
    case OpKind::Sort:
      if (p.mask_keys || p.limit) return p.mask_keys && !p.limit;
      return infer_shape(*p.kids[0], cat).flag_count() == 0 || flags_uniform(*p.kids[0], keys, cat);
    case OpKind::Select:
      return subset(columns_of(p.pred), keys) && flags_uniform(*p.kids[0], keys, cat);
    case OpKind::Project:
      return flags_uniform(*p.kids[0], keys, cat);
    case OpKind::SemiJoin: {
      if (!p.left_pred.is_true()) return false;
      const auto left = names_of(infer_shape(*p.kids[0], cat));
      for (const auto& c : columns_of(p.pred))
        if (left.count(c) && !keys.count(c)) return false;
      return flags_uniform(*p.kids[0], keys, cat);
    }
    default:
      return false;
  }
}

PlanPtr distinct_as(const PlanNode& d, PlanPtr in, DistinctMode m, std::vector<std::string> keys) {
  PlanNode n = d;
  n.kids = {std::move(in)};
  n.mode = m;
  n.keys = std::move(keys);
  return node(std::move(n));
}

PlanPtr groupby_presorted(const PlanNode& g, PlanPtr in) {
  PlanNode n = g;
  n.kids = {std::move(in)};
  n.presorted = true;
  return node(std::move(n));
}

// Aliases whose scan columns reach the output of p.
void visible(const PlanNode& p, std::set<std::string>& out) {
  switch (p.op) {
    case OpKind::Scan: out.insert(p.alias); break;
    case OpKind::Select:
    case OpKind::Sort:
    case OpKind::Adjacent:
    case OpKind::Shuffle:
    case OpKind::Project:
    case OpKind::SemiJoin: visible(*p.kids[0], out); break;
    case OpKind::Join:
      visible(*p.kids[0], out);
      visible(*p.kids[1], out);
      break;
    default: break;
  }
}

// Adds alias.derived to the scan of alias below p; nullptr when unreachable.
PlanPtr add_column(const PlanPtr& p, const std::string& alias, const std::string& derived) {
  switch (p->op) {
    case OpKind::Scan: {
      if (p->alias != alias) return nullptr;
      PlanNode n = *p;
      if (std::find(n.cols.begin(), n.cols.end(), derived) == n.cols.end()) n.cols.push_back(derived);
      return node(std::move(n));
    }
    case OpKind::Select:
    case OpKind::Sort:
    case OpKind::Adjacent:
    case OpKind::Shuffle:
    case OpKind::SemiJoin: {
      PlanPtr k = add_column(p->kids[0], alias, derived);
      if (!k) return nullptr;
      std::vector<PlanPtr> kids = p->kids;
      kids[0] = k;
      return with_kids(*p, std::move(kids));
    }
    case OpKind::Project: {
      PlanPtr k = add_column(p->kids[0], alias, derived);
      if (!k) return nullptr;
      PlanNode n = *with_kid(*p, k);
      const std::string q = alias + "." + derived;
      if (std::find(n.cols.begin(), n.cols.end(), q) == n.cols.end()) n.cols.push_back(q);
      return node(std::move(n));
    }
    case OpKind::Join:
      for (int side = 0; side < 2; ++side) {
        PlanPtr k = add_column(p->kids[static_cast<std::size_t>(side)], alias, derived);
        if (!k) continue;
        std::vector<PlanPtr> kids = p->kids;
        kids[static_cast<std::size_t>(side)] = k;
        return with_kids(*p, std::move(kids));
      }
      return nullptr;
    default:
      return nullptr;
  }
}

struct ColumnName {
  std::string alias, base;
};

std::optional<ColumnName> split_name(const std::string& q) {
  const auto dot = q.find('.');
  if (dot == std::string::npos || dot == 0) return std::nullopt;
  ColumnName c{q.substr(0, dot), q.substr(dot + 1)};
  if (c.base.find_first_of("+-") != std::string::npos) return std::nullopt;  // already derived
  return c;
}

CmpOp flip(CmpOp op) {
  switch (op) {
    case CmpOp::Lt: return CmpOp::Gt;
    case CmpOp::Gt: return CmpOp::Lt;
    case CmpOp::Le: return CmpOp::Ge;
    case CmpOp::Ge: return CmpOp::Le;
    default: return op;
  }
}

struct Proactive {
  std::set<std::string> reachable;  // aliases whose scans can take new columns
  std::vector<std::pair<std::string, std::string>> added;  // (alias, derived base)

  std::optional<std::string> derive(const std::string& q, const std::string& derived_base) {
    auto c = split_name(q);
    if (!c || !reachable.count(c->alias)) return std::nullopt;
    added.emplace_back(c->alias, derived_base);
    return c->alias + "." + derived_base;
  }

  Pred atom(const Pred& p) {
    if (p.kind != Pred::Kind::Cmp) return p;
    ExprPtr l = p.lhs, r = p.rhs;
    CmpOp op = p.op;
    if (l->kind == Expr::Kind::Const && r->kind != Expr::Kind::Const) {
      std::swap(l, r);
      op = flip(op);
    }
    if (r->kind != Expr::Kind::Const) return p;
    const Word k = r->value;
    if (l->kind == Expr::Kind::Col) {
      auto c = split_name(l->name);
      if (!c || !reachable.count(c->alias)) return p;
      const int side = l->side;
      // The sign of a - k orders a against k only while the difference cannot wrap.
      const auto ks = static_cast<std::int64_t>(k);
      const bool ordered = ks > -(std::int64_t{1} << 62) && ks < (std::int64_t{1} << 62);
      if (!ordered && op != CmpOp::Eq && op != CmpOp::Ne) return p;
      auto lo = [&] { return Pred::sign(*derive(l->name, minus_const_column(c->base, k)), side); };  // a - k < 0
      auto hi = [&] { return Pred::sign(*derive(l->name, const_minus_column(c->base, k)), side); };  // k - a < 0
      switch (op) {
        case CmpOp::Lt: return lo();
        case CmpOp::Gt: return hi();
        case CmpOp::Ge: return Pred::negate(lo());
        case CmpOp::Le: return Pred::negate(hi());
        case CmpOp::Eq: return Pred::conj({Pred::negate(lo()), Pred::negate(hi())});
        case CmpOp::Ne: return Pred::disj({lo(), hi()});
      }
    }
    // x - y op k  ->  x op (y + k)
    if (l->kind == Expr::Kind::Sub && l->a->kind == Expr::Kind::Col && l->b->kind == Expr::Kind::Col) {
      auto y = split_name(l->b->name);
      if (!y || !reachable.count(y->alias)) return p;
      auto shifted = derive(l->b->name, plus_const_column(y->base, k));
      return Pred::cmp(op, l->a, Expr::col(*shifted, l->b->side));
    }
    return p;
  }

  Pred rewrite(const Pred& p) {
    switch (p.kind) {
      case Pred::Kind::Cmp: return atom(p);
      case Pred::Kind::And:
      case Pred::Kind::Or: {
        std::vector<Pred> ks;
        for (const auto& k : p.kids) ks.push_back(rewrite(k));
        return p.kind == Pred::Kind::And ? Pred::conj(std::move(ks)) : Pred::disj(std::move(ks));
      }
      case Pred::Kind::Not: return Pred::negate(rewrite(p.kids[0]));
      default: return p;
    }
  }
};

}  // namespace

bool uniform_runs(const PlanNode& p, const std::vector<std::string>& keys, const Catalog& cat) {
  const Shape s = infer_shape(p, cat);
  if (s.shared_valid || !has_prefix(s.sorted_by, keys)) return false;
  return flags_uniform(p, std::set<std::string>(keys.begin(), keys.end()), cat);
}

std::vector<PlanPtr> blocking_pushdown(const PlanPtr& p, const Catalog& cat) {
  std::vector<PlanPtr> out;
  if (p->op == OpKind::Sort && p->kids[0]->op == OpKind::Select && !p->limit && !p->mask_keys) {
    const PlanPtr& sel = p->kids[0];
    const PlanPtr& x = sel->kids[0];
    if (!p->flag_unit) {
      out.push_back(with_kid(*sel, with_kid(*p, x)));
    } else if (all_const_eq(sel->pred) && infer_shape(*x, cat).flag_count() == 0) {
      // Live rows share the constant columns, so sorting on them first keeps
      // the live rows contiguous and in key order.
      PlanNode s = *p;
      s.flag_unit = false;
      s.sort_keys.clear();
      for (const auto& c : const_eq_columns(sel->pred)) s.sort_keys.push_back({c, false});
      for (const auto& k : p->sort_keys) s.sort_keys.push_back(k);
      s.kids = {x};
      out.push_back(with_kid(*sel, node(std::move(s))));
    }
  }
  const bool group = p->op == OpKind::GroupBy && !p->presorted;
  const bool distinct = p->op == OpKind::Distinct &&
                        (p->mode == DistinctMode::Sequential || p->mode == DistinctMode::Fused);
  if (!group && !distinct) return out;
  const PlanPtr& in = p->kids[0];
  const Shape s = infer_shape(*in, cat);
  if (has_prefix(s.sorted_by, p->keys)) {
    if (group) out.push_back(groupby_presorted(*p, in));
    if (distinct) {
      out.push_back(distinct_as(*p, in, DistinctMode::OddEven, p->keys));
      if (uniform_runs(*in, p->keys, cat)) out.push_back(distinct_as(*p, in, DistinctMode::Uniform, p->keys));
    }
  } else {
    PlanPtr bottom;
    auto chain = filter_chain(in, bottom);
    const std::set<std::string> keys(p->keys.begin(), p->keys.end());
    if (!chain.empty() && subset(keys, names_of(infer_shape(*bottom, cat)))) {
      PlanPtr sorted = rebuild_chain(chain, sort_on(bottom, p->keys));
      if (group) out.push_back(groupby_presorted(*p, sorted));
      if (distinct) {
        out.push_back(distinct_as(*p, sorted, DistinctMode::OddEven, p->keys));
        const bool flagged = infer_shape(*bottom, cat).flag_count() > 0;
        PlanPtr masked = rebuild_chain(chain, sort_on(bottom, p->keys, flagged));
        if (uniform_runs(*masked, p->keys, cat))
          out.push_back(distinct_as(*p, masked, DistinctMode::Uniform, p->keys));
      }
    }
  }
  // Distinct over rows sorted on (c..., keys) where a selection fixed every c.
  if (distinct && !has_prefix(s.sorted_by, p->keys)) {
    std::set<std::string> fixed;
    for (PlanPtr cur = in;;) {
      if (cur->op == OpKind::Select)
        for (const auto& c : const_eq_columns(cur->pred)) fixed.insert(c);
      if (cur->op != OpKind::Select && cur->op != OpKind::Adjacent && cur->op != OpKind::SemiJoin &&
          cur->op != OpKind::Sort)
        break;
      if (cur->op == OpKind::Sort && cur->limit) break;
      cur = cur->kids[0];
    }
    std::size_t e = 0;
    while (e < s.sorted_by.size() && fixed.count(s.sorted_by[e])) ++e;
    std::vector<std::string> rest(s.sorted_by.begin() + static_cast<std::ptrdiff_t>(e), s.sorted_by.end());
    if (e > 0 && has_prefix(rest, p->keys)) {
      std::vector<std::string> keys(s.sorted_by.begin(), s.sorted_by.begin() + static_cast<std::ptrdiff_t>(e));
      keys.insert(keys.end(), p->keys.begin(), p->keys.end());
      out.push_back(make_project(distinct_as(*p, in, DistinctMode::OddEven, keys), p->keys));
    }
  }
  return out;
}

std::vector<PlanPtr> join_pushup(const PlanPtr& p, const Catalog& cat) {
  if (p->op != OpKind::Distinct || p->kids[0]->op != OpKind::Join) return {};
  const PlanPtr& j = p->kids[0];
  if (!j->left_pred.is_true() || !j->right_pred.is_true() || j->pred.kind != Pred::Kind::Cmp ||
      j->pred.op != CmpOp::Eq || p->keys.size() != 1)
    return {};
  const Expr& a = *j->pred.lhs;
  const Expr& b = *j->pred.rhs;
  if (a.kind != Expr::Kind::Col || b.kind != Expr::Kind::Col) return {};
  const auto l = names_of(infer_shape(*j->kids[0], cat));
  const auto r = names_of(infer_shape(*j->kids[1], cat));
  std::string lk = a.name, rk = b.name;
  if (!l.count(lk)) std::swap(lk, rk);
  if (!l.count(lk) || !r.count(rk)) return {};
  if (p->keys[0] != lk && p->keys[0] != rk) return {};
  PlanPtr dl = distinct_as(*p, j->kids[0], DistinctMode::Fused, {lk});
  PlanPtr dr = distinct_as(*p, j->kids[1], DistinctMode::Fused, {rk});
  return {make_project(with_kids(*j, {dl, dr}), p->keys)};
}

std::vector<PlanPtr> join_agg_decomposition(const PlanPtr& p, const Catalog& cat) {
  if ((p->op != OpKind::GroupBy && p->op != OpKind::Distinct) || p->kids[0]->op != OpKind::Join) return {};
  const PlanPtr& j = p->kids[0];
  const std::set<std::string> keys(p->keys.begin(), p->keys.end());
  PlanPtr l = j->kids[0], r = j->kids[1];
  Pred lp = j->left_pred, rp = j->right_pred;
  if (!subset(keys, names_of(infer_shape(*l, cat)))) {
    if (!subset(keys, names_of(infer_shape(*r, cat)))) return {};
    std::swap(l, r);
    std::swap(lp, rp);
  }
  auto semijoin = [&](PlanPtr left, std::optional<AggSpec> partial) {
    PlanNode s = *make_semijoin(std::move(left), r, j->pred);
    s.left_pred = lp;
    s.right_pred = rp;
    s.partial = std::move(partial);
    return node(std::move(s));
  };
  std::vector<PlanPtr> out;
  if (p->op == OpKind::GroupBy) {
    for (const auto& a : p->aggs)
      if (a.fn != AggFn::Count) return {};
    const std::string part = "#matches";
    PlanNode g = *p;
    g.presorted = true;
    g.aggs.clear();
    for (const auto& a : p->aggs) g.aggs.push_back({AggFn::Sum, part, a.out});
    g.kids = {semijoin(sort_on(l, p->keys), AggSpec{AggFn::Count, "", part})};
    out.push_back(node(std::move(g)));
    return out;
  }
  const bool flagged = infer_shape(*l, cat).flag_count() > 0;
  PlanPtr masked = semijoin(sort_on(l, p->keys, flagged), std::nullopt);
  if (uniform_runs(*masked, p->keys, cat)) out.push_back(distinct_as(*p, masked, DistinctMode::Uniform, p->keys));
  out.push_back(distinct_as(*p, semijoin(sort_on(l, p->keys), std::nullopt), DistinctMode::OddEven, p->keys));
  return out;
}

std::vector<PlanPtr> predicate_fusion(const PlanPtr& p, const Catalog& cat) {
  std::vector<PlanPtr> out;
  if (p->op == OpKind::Select) {
    const PlanPtr& k = p->kids[0];
    if (k->op == OpKind::Select) out.push_back(make_select(k->kids[0], Pred::conj({k->pred, p->pred})));
    if (k->op == OpKind::Join) {
      PlanNode j = *k;
      j.pred = Pred::conj({k->pred, p->pred});
      out.push_back(node(std::move(j)));
    }
    if (k->op == OpKind::SemiJoin) {
      const auto left = names_of(infer_shape(*k->kids[0], cat));
      if (subset(columns_of(p->pred), left)) {
        PlanNode j = *k;
        j.left_pred = Pred::conj({k->left_pred, p->pred});
        out.push_back(node(std::move(j)));
      }
    }
  }
  if (p->op == OpKind::Join || p->op == OpKind::SemiJoin) {
    PlanNode j = *p;
    bool changed = false;
    if (j.kids[0]->op == OpKind::Select) {
      j.left_pred = Pred::conj({j.left_pred, j.kids[0]->pred});
      j.kids[0] = j.kids[0]->kids[0];
      changed = true;
    }
    if (j.kids[1]->op == OpKind::Select) {
      j.right_pred = Pred::conj({j.right_pred, j.kids[1]->pred});
      j.kids[1] = j.kids[1]->kids[0];
      changed = true;
    }
    if (changed) out.push_back(node(std::move(j)));
  }
  return out;
}

std::vector<PlanPtr> distinct_fusion(const PlanPtr& p, const Catalog&) {
  if (p->op != OpKind::Distinct || p->mode != DistinctMode::Sequential) return {};
  return {distinct_as(*p, p->kids[0], DistinctMode::Fused, p->keys)};
}

std::vector<PlanPtr> dual_sharing(const PlanPtr& p, const Catalog&) {
  if ((p->op != OpKind::GroupBy && p->op != OpKind::GlobalAgg) || p->dual) return {};
  for (const auto& a : p->aggs) {
    if (a.fn == AggFn::Count || a.fn == AggFn::Sum || a.fn == AggFn::Avg) {
      PlanNode n = *p;
      n.dual = true;
      return {node(std::move(n))};
    }
  }
  return {};
}

std::vector<PlanPtr> proactive_sharing(const PlanPtr& p, const Catalog&) {
  if (p->op != OpKind::Select && p->op != OpKind::Join && p->op != OpKind::SemiJoin && p->op != OpKind::Adjacent)
    return {};
  PlanNode n = *p;
  std::vector<Proactive> per_kid(n.kids.size());
  for (std::size_t i = 0; i < n.kids.size(); ++i) visible(*n.kids[i], per_kid[i].reachable);
  // Atoms over several inputs (join conditions) see every input.
  Proactive all;
  for (auto& k : per_kid) all.reachable.insert(k.reachable.begin(), k.reachable.end());
  n.pred = all.rewrite(n.pred);
  if (!n.left_pred.is_true()) n.left_pred = per_kid[0].rewrite(n.left_pred);
  if (n.kids.size() > 1 && !n.right_pred.is_true()) n.right_pred = per_kid[1].rewrite(n.right_pred);
  std::vector<std::pair<std::string, std::string>> added = all.added;
  for (auto& k : per_kid) added.insert(added.end(), k.added.begin(), k.added.end());
  if (added.empty()) return {};
  for (const auto& [alias, derived] : added) {
    bool done = false;
    for (auto& kid : n.kids) {
      std::set<std::string> vis;
      visible(*kid, vis);
      if (!vis.count(alias)) continue;
      PlanPtr k = add_column(kid, alias, derived);
      if (!k) return {};
      kid = k;
      done = true;
      break;
    }
    if (!done) return {};
  }
  return {node(std::move(n))};
}

const std::vector<Rule>& all() {
  static const std::vector<Rule> r = {
      {"blocking-pushdown", &blocking_pushdown},   {"join-pushup", &join_pushup},
      {"join-agg-decomposition", &join_agg_decomposition}, {"predicate-fusion", &predicate_fusion},
      {"distinct-fusion", &distinct_fusion},       {"dual-sharing", &dual_sharing},
      {"proactive-sharing", &proactive_sharing},
  };
  return r;
}

}  // namespace secrecy::rules
