#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "secrecy/predicate.hpp"
#include "secrecy/share.hpp"

namespace secrecy {

enum class OpKind { Scan, Select, Project, Join, SemiJoin, Sort, GroupBy, Distinct, Adjacent, GlobalAgg, Shuffle, Open };
std::string to_string(OpKind k);

enum class AggFn { Count, Sum, Min, Max, Avg };
std::string to_string(AggFn f);

/// COUNT ignores col. AVG produces out + "_sum" and out + "_cnt".
struct AggSpec {
  AggFn fn = AggFn::Count;
  std::string col;
  std::string out;
  friend bool operator==(const AggSpec&, const AggSpec&) = default;
};

struct SortKey {
  std::string col;
  bool desc = false;
  friend bool operator==(const SortKey&, const SortKey&) = default;
};

/// Physical strategy of a Distinct node.
///  Sequential: sort on keys, then the n-round composition with upstream flags.
///  Fused:      sort on keys with dead rows given sentinel keys, adjacent eq.
///  Uniform:    presorted input whose flags are constant within each key run;
///              adjacent eq only.
///  OddEven:    presorted input, odd-even merge of each key run.
enum class DistinctMode { Sequential, Fused, Uniform, OddEven };
std::string to_string(DistinctMode m);

struct PlanNode;
using PlanPtr = std::shared_ptr<const PlanNode>;

struct PlanNode {
  OpKind op = OpKind::Scan;
  std::vector<PlanPtr> kids;

  // Scan: base table, alias qualifier and the base columns read.
  std::string table;
  std::string alias;
  std::vector<std::string> cols;  // also Project / Open output columns

  // Select, Join / SemiJoin condition, Adjacent pair predicate.
  Pred pred;
  // Side predicates fused into a Join / SemiJoin.
  Pred left_pred;
  Pred right_pred;
  // SemiJoin partial aggregate (COUNT per left row) when set.
  std::optional<AggSpec> partial;

  // Sort
  std::vector<SortKey> sort_keys;
  bool flag_unit = false;  // live rows first
  bool mask_keys = false;  // dead rows get sentinel keys before sorting
  std::optional<std::size_t> limit;

  // GroupBy / Distinct keys, GroupBy / GlobalAgg aggregates.
  std::vector<std::string> keys;
  std::vector<AggSpec> aggs;
  bool presorted = false;
  bool dual = false;
  DistinctMode mode = DistinctMode::Sequential;

  std::size_t size() const;  // node count
};

std::size_t hash_plan(const PlanNode& n);
bool same_plan(const PlanNode& a, const PlanNode& b);

PlanPtr make_scan(std::string table, std::string alias, std::vector<std::string> cols);
PlanPtr make_select(PlanPtr in, Pred p);
PlanPtr make_project(PlanPtr in, std::vector<std::string> cols);
PlanPtr make_join(PlanPtr l, PlanPtr r, Pred theta);
PlanPtr make_semijoin(PlanPtr l, PlanPtr r, Pred theta);
PlanPtr make_sort(PlanPtr in, std::vector<SortKey> keys, std::optional<std::size_t> limit = {});
PlanPtr make_groupby(PlanPtr in, std::vector<std::string> keys, std::vector<AggSpec> aggs);
PlanPtr make_distinct(PlanPtr in, std::vector<std::string> keys);
PlanPtr make_adjacent(PlanPtr in, Pred p);
PlanPtr make_global_agg(PlanPtr in, std::vector<AggSpec> aggs);
PlanPtr make_shuffle(PlanPtr in);
PlanPtr make_open(PlanPtr in, std::vector<std::string> cols);

/// Copy of n with replaced children.
PlanPtr with_kids(const PlanNode& n, std::vector<PlanPtr> kids);

struct ColInfo {
  std::string name;
  Mode mode = Mode::Boolean;
  unsigned bits = kWordBits;
  friend bool operator==(const ColInfo&, const ColInfo&) = default;
};

/// Public description of an intermediate table.
struct Shape {
  std::size_t rows = 0;
  std::vector<ColInfo> cols;
  bool shared_flag = false;   // f is a secret bit vector rather than all ones
  bool shared_valid = false;  // separate d bit from a distinct / group pass
  std::vector<std::string> sorted_by;  // key order of the physical rows

  const ColInfo* find(const std::string& name) const;
  bool has(const std::string& name) const { return find(name) != nullptr; }
  /// Number of flag columns carried along with the data.
  std::size_t flag_count() const { return (shared_flag ? 1 : 0) + (shared_valid ? 1 : 0); }
  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Public metadata of a base table.
struct TableInfo {
  std::vector<std::string> columns;
  std::size_t live_rows = 0;
  std::size_t padded_rows = 0;  // power of two
  bool derive = true;           // false: only the listed columns exist
};

/// Base columns and the proactive columns derivable from them.
struct Catalog {
  std::map<std::string, TableInfo> tables;

  const TableInfo& at(const std::string& table) const;
  /// True for base columns and for c-k, k-c, c+k forms over a base column c.
  bool provides(const std::string& table, const std::string& column) const;
};

/// Output shapes of every node, bottom-up. Throws UnknownColumn.
Shape infer_shape(const PlanNode& n, const Catalog& cat);
/// Output shape of n alone given its children's shapes.
Shape infer_node_shape(const PlanNode& n, const std::vector<Shape>& in, const Catalog& cat);
std::vector<Shape> child_shapes(const PlanNode& n, const Catalog& cat);

/// Output column names of an aggregate.
std::vector<std::string> agg_outputs(const AggSpec& a);

std::string plan_to_json(const PlanNode& n, int indent = 2);
std::string plan_to_text(const PlanNode& n);
std::string describe(const PlanNode& n);  // one line for the node itself

}  // namespace secrecy
