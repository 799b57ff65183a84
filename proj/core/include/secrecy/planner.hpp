#pragma once

#include <set>
#include <string>
#include <vector>

#include "secrecy/cost.hpp"
#include "secrecy/plan.hpp"

namespace secrecy {

/// Rewrite rule: alternatives for the root of p. Rules only look at the root
/// and the nodes right below it; the planner applies them at every node.
struct Rule {
  std::string name;
  std::vector<PlanPtr> (*apply)(const PlanPtr& p, const Catalog& cat);
};

namespace rules {

std::vector<PlanPtr> blocking_pushdown(const PlanPtr& p, const Catalog& cat);
std::vector<PlanPtr> join_pushup(const PlanPtr& p, const Catalog& cat);
std::vector<PlanPtr> join_agg_decomposition(const PlanPtr& p, const Catalog& cat);
std::vector<PlanPtr> predicate_fusion(const PlanPtr& p, const Catalog& cat);
std::vector<PlanPtr> distinct_fusion(const PlanPtr& p, const Catalog& cat);
std::vector<PlanPtr> dual_sharing(const PlanPtr& p, const Catalog& cat);
std::vector<PlanPtr> proactive_sharing(const PlanPtr& p, const Catalog& cat);

const std::vector<Rule>& all();

/// True when every key run of p's output has a single live value: rows with
/// equal keys are adjacent and are either all live or all dead.
bool uniform_runs(const PlanNode& p, const std::vector<std::string>& keys, const Catalog& cat);

}  // namespace rules

struct PlannerOptions {
  CostParams cost;
  std::size_t node_cap = 32;  // larger plans are returned as given
};

struct Optimized {
  PlanPtr plan;
  PlanCost cost;
  std::set<std::string> rules;  // rules used by the chosen plan
  bool capped = false;
};

/// Bottom-up search over rule alternatives; returns the plan with the least
/// alpha*ops + beta*rounds. Ties go to fewer rounds, then fewer nodes, then
/// the plan text.
Optimized optimize(const PlanPtr& plan, const Catalog& cat, const PlannerOptions& opt = {});

/// True when a is strictly preferred over b under the tie-break order.
bool better(const PlanCost& a, const PlanNode& pa, const PlanCost& b, const PlanNode& pb);

/// Per-node table: node, ops, rounds, composition rounds, cumulative ops and rounds.
std::string explain_table(const PlanCost& cost);
std::string explain_json(const PlanNode& plan, const PlanCost& cost, const std::set<std::string>& rules, int indent = 2);

}  // namespace secrecy
