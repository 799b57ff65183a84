#include "secrecy/plan.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "secrecy/error.hpp"

namespace secrecy {

std::string to_string(OpKind k) {
  switch (k) {
    case OpKind::Scan: return "Scan";
    case OpKind::Select: return "Select";
    case OpKind::Project: return "Project";
    case OpKind::Join: return "Join";
    case OpKind::SemiJoin: return "SemiJoin";
    case OpKind::Sort: return "Sort";
    case OpKind::GroupBy: return "GroupBy";
    case OpKind::Distinct: return "Distinct";
    case OpKind::Adjacent: return "Adjacent";
    case OpKind::GlobalAgg: return "GlobalAgg";
    case OpKind::Shuffle: return "Shuffle";
    case OpKind::Open: return "Open";
  }
  return "?";
}

std::string to_string(AggFn f) {
  switch (f) {
    case AggFn::Count: return "COUNT";
    case AggFn::Sum: return "SUM";
    case AggFn::Min: return "MIN";
    case AggFn::Max: return "MAX";
    case AggFn::Avg: return "AVG";
  }
  return "?";
}

std::string to_string(DistinctMode m) {
  switch (m) {
    case DistinctMode::Sequential: return "sequential";
    case DistinctMode::Fused: return "fused";
    case DistinctMode::Uniform: return "uniform";
    case DistinctMode::OddEven: return "odd-even";
  }
  return "?";
}

std::size_t PlanNode::size() const {
  std::size_t s = 1;
  for (const auto& k : kids) s += k->size();
  return s;
}

namespace {

PlanPtr node(OpKind op, std::vector<PlanPtr> kids) {
  auto n = std::make_shared<PlanNode>();
  n->op = op;
  n->kids = std::move(kids);
  return n;
}

void mix(std::size_t& h, std::size_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); }

}  // namespace

PlanPtr make_scan(std::string table, std::string alias, std::vector<std::string> cols) {
  auto n = std::make_shared<PlanNode>();
  n->op = OpKind::Scan;
  n->table = std::move(table);
  n->alias = std::move(alias);
  n->cols = std::move(cols);
  return n;
}

PlanPtr make_select(PlanPtr in, Pred p) {
  auto n = std::const_pointer_cast<PlanNode>(node(OpKind::Select, {std::move(in)}));
  n->pred = std::move(p);
  return n;
}

PlanPtr make_project(PlanPtr in, std::vector<std::string> cols) {
  auto n = std::const_pointer_cast<PlanNode>(node(OpKind::Project, {std::move(in)}));
  n->cols = std::move(cols);
  return n;
}

PlanPtr make_join(PlanPtr l, PlanPtr r, Pred theta) {
  auto n = std::const_pointer_cast<PlanNode>(node(OpKind::Join, {std::move(l), std::move(r)}));
  n->pred = std::move(theta);
  return n;
}

PlanPtr make_semijoin(PlanPtr l, PlanPtr r, Pred theta) {
  auto n = std::const_pointer_cast<PlanNode>(node(OpKind::SemiJoin, {std::move(l), std::move(r)}));
  n->pred = std::move(theta);
  return n;
}

PlanPtr make_sort(PlanPtr in, std::vector<SortKey> keys, std::optional<std::size_t> limit) {
  auto n = std::const_pointer_cast<PlanNode>(node(OpKind::Sort, {std::move(in)}));
  n->sort_keys = std::move(keys);
  n->limit = limit;
  return n;
}

PlanPtr make_groupby(PlanPtr in, std::vector<std::string> keys, std::vector<AggSpec> aggs) {
  auto n = std::const_pointer_cast<PlanNode>(node(OpKind::GroupBy, {std::move(in)}));
  n->keys = std::move(keys);
  n->aggs = std::move(aggs);
  return n;
}

PlanPtr make_distinct(PlanPtr in, std::vector<std::string> keys) {
  auto n = std::const_pointer_cast<PlanNode>(node(OpKind::Distinct, {std::move(in)}));
  n->keys = std::move(keys);
  return n;
}

PlanPtr make_adjacent(PlanPtr in, Pred p) {
  auto n = std::const_pointer_cast<PlanNode>(node(OpKind::Adjacent, {std::move(in)}));
  n->pred = std::move(p);
  return n;
}

PlanPtr make_global_agg(PlanPtr in, std::vector<AggSpec> aggs) {
  auto n = std::const_pointer_cast<PlanNode>(node(OpKind::GlobalAgg, {std::move(in)}));
  n->aggs = std::move(aggs);
  return n;
}

PlanPtr make_shuffle(PlanPtr in) { return node(OpKind::Shuffle, {std::move(in)}); }

PlanPtr make_open(PlanPtr in, std::vector<std::string> cols) {
  auto n = std::const_pointer_cast<PlanNode>(node(OpKind::Open, {std::move(in)}));
  n->cols = std::move(cols);
  return n;
}

PlanPtr with_kids(const PlanNode& n, std::vector<PlanPtr> kids) {
  auto c = std::make_shared<PlanNode>(n);
  c->kids = std::move(kids);
  return c;
}

std::size_t hash_plan(const PlanNode& n) {
  std::hash<std::string> hs;
  std::size_t h = static_cast<std::size_t>(n.op);
  mix(h, hs(describe(n)));
  for (const auto& k : n.kids) mix(h, hash_plan(*k));
  return h;
}

bool same_plan(const PlanNode& a, const PlanNode& b) {
  if (a.op != b.op || a.kids.size() != b.kids.size() || describe(a) != describe(b)) return false;
  for (std::size_t i = 0; i < a.kids.size(); ++i)
    if (!same_plan(*a.kids[i], *b.kids[i])) return false;
  return true;
}

const ColInfo* Shape::find(const std::string& name) const {
  for (const auto& c : cols)
    if (c.name == name) return &c;
  return nullptr;
}

const TableInfo& Catalog::at(const std::string& table) const {
  auto it = tables.find(table);
  if (it == tables.end()) throw Error(Errc::UnknownTable, table);
  return it->second;
}

namespace {

bool is_int(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = s[0] == '-' ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i)
    if (s[i] < '0' || s[i] > '9') return false;
  return true;
}

bool is_base(const TableInfo& t, const std::string& c) {
  return std::find(t.columns.begin(), t.columns.end(), c) != t.columns.end();
}

}  // namespace

bool Catalog::provides(const std::string& table, const std::string& column) const {
  const auto& t = at(table);
  if (is_base(t, column)) return true;
  if (!t.derive) return false;
  // c+K and c-K
  for (std::size_t pos = 1; pos < column.size(); ++pos) {
    char ch = column[pos];
    if ((ch == '+' || ch == '-') && is_base(t, column.substr(0, pos)) && is_int(column.substr(pos + 1))) return true;
  }
  // K-c
  auto dash = column.find('-', column[0] == '-' ? 1 : 0);
  if (dash != std::string::npos && is_int(column.substr(0, dash)) && is_base(t, column.substr(dash + 1))) return true;
  return false;
}

std::vector<std::string> agg_outputs(const AggSpec& a) {
  if (a.fn == AggFn::Avg) return {a.out + "_sum", a.out + "_cnt"};
  return {a.out};
}

namespace {

const ColInfo& need(const Shape& s, const std::string& name) {
  const ColInfo* c = s.find(name);
  if (!c) throw Error(Errc::UnknownColumn, name);
  return *c;
}

void need_all(const Shape& s, const Pred& p) {
  for (const auto& c : columns_of(p)) need(s, c);
}

std::vector<std::string> prefix_in(const std::vector<std::string>& order, const Shape& s) {
  std::vector<std::string> out;
  for (const auto& k : order) {
    if (!s.has(k)) break;
    out.push_back(k);
  }
  return out;
}

Mode agg_mode(const AggSpec& a, bool dual) {
  if (dual && (a.fn == AggFn::Count || a.fn == AggFn::Sum || a.fn == AggFn::Avg)) return Mode::Arithmetic;
  return Mode::Boolean;
}

}  // namespace

std::vector<Shape> child_shapes(const PlanNode& n, const Catalog& cat) {
  std::vector<Shape> v;
  for (const auto& k : n.kids) v.push_back(infer_shape(*k, cat));
  return v;
}

Shape infer_shape(const PlanNode& n, const Catalog& cat) { return infer_node_shape(n, child_shapes(n, cat), cat); }

Shape infer_node_shape(const PlanNode& n, const std::vector<Shape>& in, const Catalog& cat) {
  Shape s;
  switch (n.op) {
    case OpKind::Scan: {
      const auto& t = cat.at(n.table);
      s.rows = t.padded_rows;
      for (const auto& c : n.cols) {
        if (!cat.provides(n.table, c)) throw Error(Errc::UnknownColumn, n.table + "." + c);
        s.cols.push_back({n.alias + "." + c, Mode::Boolean, kWordBits});
      }
      s.shared_flag = t.live_rows < t.padded_rows;
      return s;
    }
    case OpKind::Select:
      s = in[0];
      need_all(s, n.pred);
      if (!n.pred.is_true()) s.shared_flag = true;
      return s;
    case OpKind::Project: {
      s = in[0];
      s.cols.clear();
      for (const auto& c : n.cols) s.cols.push_back(need(in[0], c));
      s.sorted_by = prefix_in(in[0].sorted_by, s);
      return s;
    }
    case OpKind::Join:
    case OpKind::SemiJoin: {
      const Shape& l = in[0];
      const Shape& r = in[1];
      Shape both = l;
      for (const auto& c : r.cols) both.cols.push_back(c);
      need_all(both, n.pred);
      need_all(l, n.left_pred);
      need_all(r, n.right_pred);
      if (n.op == OpKind::Join) {
        s = both;
        s.rows = l.rows * r.rows;
      } else {
        s = l;
        if (n.partial) s.cols.push_back({n.partial->out, Mode::Arithmetic, kWordBits});
      }
      s.shared_flag = true;
      s.shared_valid = false;
      s.sorted_by = l.sorted_by;
      return s;
    }
    case OpKind::Sort: {
      s = in[0];
      for (const auto& k : n.sort_keys) need(s, k.col);
      if (s.rows > 1)
        for (auto& c : s.cols) c.mode = Mode::Boolean;
      if (s.rows > 1 && (n.flag_unit || n.mask_keys)) {
        s.shared_flag = in[0].flag_count() > 0;
        s.shared_valid = false;
      }
      if (n.limit) s.rows = std::min(*n.limit, s.rows);
      s.sorted_by.clear();
      if (!n.flag_unit)
        for (const auto& k : n.sort_keys) s.sorted_by.push_back(k.col);
      return s;
    }
    case OpKind::GroupBy: {
      const Shape& x = in[0];
      s.rows = x.rows;
      for (const auto& k : n.keys) {
        ColInfo c = need(x, k);
        c.mode = Mode::Boolean;
        s.cols.push_back(c);
      }
      for (const auto& a : n.aggs) {
        if (a.fn != AggFn::Count) need(x, a.col);
        for (const auto& o : agg_outputs(a)) s.cols.push_back({o, agg_mode(a, n.dual), kWordBits});
      }
      s.shared_flag = true;
      s.sorted_by = n.keys;
      return s;
    }
    case OpKind::Distinct: {
      const Shape& x = in[0];
      s.rows = x.rows;
      for (const auto& k : n.keys) {
        ColInfo c = need(x, k);
        c.mode = Mode::Boolean;
        s.cols.push_back(c);
      }
      const bool flagged = x.flag_count() > 0;
      switch (n.mode) {
        case DistinctMode::Sequential:
          s.shared_flag = flagged;
          s.shared_valid = true;
          s.sorted_by = n.keys;
          break;
        case DistinctMode::Fused:
          s.shared_flag = flagged;
          s.shared_valid = true;
          if (!flagged) s.sorted_by = n.keys;
          break;
        case DistinctMode::Uniform:
          s.shared_flag = x.shared_flag;
          s.shared_valid = true;
          s.sorted_by = n.keys;
          break;
        case DistinctMode::OddEven:
          s.shared_flag = true;
          s.sorted_by = n.keys;
          break;
      }
      return s;
    }
    case OpKind::Adjacent:
      s = in[0];
      need_all(s, n.pred);
      s.shared_flag = true;
      s.shared_valid = false;
      return s;
    case OpKind::GlobalAgg: {
      const Shape& x = in[0];
      s.rows = 1;
      for (const auto& a : n.aggs) {
        if (a.fn != AggFn::Count) need(x, a.col);
        for (const auto& o : agg_outputs(a)) s.cols.push_back({o, agg_mode(a, n.dual), kWordBits});
      }
      return s;
    }
    case OpKind::Shuffle:
      s = in[0];
      s.sorted_by.clear();
      if (s.rows > 1)
        for (auto& c : s.cols) c.mode = Mode::Boolean;
      return s;
    case OpKind::Open: {
      s = in[0];
      s.cols.clear();
      for (const auto& c : n.cols) s.cols.push_back(need(in[0], c));
      return s;
    }
  }
  return s;
}

namespace {

std::string keys_text(const std::vector<std::string>& ks) {
  std::string s;
  for (std::size_t i = 0; i < ks.size(); ++i) s += (i ? ", " : "") + ks[i];
  return s;
}

std::string agg_text(const AggSpec& a) {
  return to_string(a.fn) + "(" + (a.fn == AggFn::Count ? "*" : a.col) + ") AS " + a.out;
}

}  // namespace

std::string describe(const PlanNode& n) {
  std::ostringstream o;
  o << to_string(n.op);
  switch (n.op) {
    case OpKind::Scan:
      o << " " << n.table << " AS " << n.alias << " [" << keys_text(n.cols) << "]";
      break;
    case OpKind::Select:
    case OpKind::Adjacent:
      o << " " << to_string(n.pred);
      break;
    case OpKind::Project:
    case OpKind::Open:
      o << " [" << keys_text(n.cols) << "]";
      break;
    case OpKind::Join:
    case OpKind::SemiJoin:
      o << " ON " << to_string(n.pred);
      if (!n.left_pred.is_true()) o << " | left " << to_string(n.left_pred);
      if (!n.right_pred.is_true()) o << " | right " << to_string(n.right_pred);
      if (n.partial) o << " | partial " << agg_text(*n.partial);
      break;
    case OpKind::Sort: {
      o << " [";
      for (std::size_t i = 0; i < n.sort_keys.size(); ++i)
        o << (i ? ", " : "") << n.sort_keys[i].col << (n.sort_keys[i].desc ? " DESC" : "");
      o << "]";
      if (n.flag_unit) o << " live-first";
      if (n.mask_keys) o << " mask";
      if (n.limit) o << " LIMIT " << *n.limit;
      break;
    }
    case OpKind::GroupBy:
      o << " [" << keys_text(n.keys) << "]";
      for (const auto& a : n.aggs) o << " " << agg_text(a);
      if (n.presorted) o << " presorted";
      if (n.dual) o << " dual";
      break;
    case OpKind::Distinct:
      o << " [" << keys_text(n.keys) << "] " << to_string(n.mode);
      break;
    case OpKind::GlobalAgg:
      for (const auto& a : n.aggs) o << " " << agg_text(a);
      if (n.dual) o << " dual";
      break;
    case OpKind::Shuffle:
      break;
  }
  return o.str();
}

namespace {

void text_rec(const PlanNode& n, int depth, std::ostringstream& o) {
  o << std::string(2 * depth, ' ') << describe(n) << "\n";
  for (const auto& k : n.kids) text_rec(*k, depth + 1, o);
}

nlohmann::json json_rec(const PlanNode& n) {
  nlohmann::json j;
  j["op"] = to_string(n.op);
  switch (n.op) {
    case OpKind::Scan:
      j["table"] = n.table;
      j["alias"] = n.alias;
      j["columns"] = n.cols;
      break;
    case OpKind::Project:
    case OpKind::Open:
      j["columns"] = n.cols;
      break;
    case OpKind::Select:
    case OpKind::Adjacent:
      j["predicate"] = to_string(n.pred);
      break;
    case OpKind::Join:
    case OpKind::SemiJoin:
      j["predicate"] = to_string(n.pred);
      if (!n.left_pred.is_true()) j["left_predicate"] = to_string(n.left_pred);
      if (!n.right_pred.is_true()) j["right_predicate"] = to_string(n.right_pred);
      if (n.partial) j["partial"] = agg_text(*n.partial);
      break;
    case OpKind::Sort: {
      nlohmann::json ks = nlohmann::json::array();
      for (const auto& k : n.sort_keys) ks.push_back({{"column", k.col}, {"desc", k.desc}});
      j["keys"] = ks;
      j["annotations"] = {{"live_first", n.flag_unit}, {"mask_keys", n.mask_keys}};
      if (n.limit) j["limit"] = *n.limit;
      break;
    }
    case OpKind::GroupBy:
    case OpKind::GlobalAgg: {
      if (n.op == OpKind::GroupBy) j["keys"] = n.keys;
      nlohmann::json as = nlohmann::json::array();
      for (const auto& a : n.aggs) as.push_back(agg_text(a));
      j["aggregates"] = as;
      j["annotations"] = {{"presorted", n.presorted}, {"sharing", n.dual ? "dual" : "boolean"}};
      break;
    }
    case OpKind::Distinct:
      j["keys"] = n.keys;
      j["annotations"] = {{"mode", to_string(n.mode)}};
      break;
    case OpKind::Shuffle:
      break;
  }
  nlohmann::json kids = nlohmann::json::array();
  for (const auto& k : n.kids) kids.push_back(json_rec(*k));
  j["children"] = kids;
  return j;
}

}  // namespace

std::string plan_to_text(const PlanNode& n) {
  std::ostringstream o;
  text_rec(n, 0, o);
  return o.str();
}

std::string plan_to_json(const PlanNode& n, int indent) { return json_rec(n).dump(indent); }

}  // namespace secrecy
