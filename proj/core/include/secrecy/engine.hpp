#pragma once

#include <array>
#include <set>
#include <string>
#include <vector>

#include "secrecy/executor.hpp"
#include "secrecy/lower.hpp"
#include "secrecy/planner.hpp"
#include "secrecy/sql.hpp"

namespace secrecy {

struct EngineOptions {
  PlannerOptions planner;  // alpha, beta, batch rows, node cap
  bool optimize = true;
  bool strict = true;
  RunOptions run;  // transport, seed, width, delivery
};

/// A query ready to run: parsed, lowered and (unless disabled) optimized.
struct Prepared {
  Lowered lowered;  // baseline plan and output columns
  PlanPtr plan;     // plan to execute
  PlanCost cost;    // predicted cost of plan
  std::set<std::string> rules;
  bool capped = false;
};

Prepared prepare(const std::string& sql_text, const Catalog& cat, const EngineOptions& opt);

struct Outcome {
  std::vector<std::string> names;  // display names
  std::vector<std::vector<std::int64_t>> rows;
  std::vector<NodeRun> nodes;  // party 0, per plan node
  Counters counters;           // party 0
  std::array<CommTrace, kParties> traces;
  double seconds = 0;
};

/// Runs the prepared plan on three parties over their shares.
Outcome execute_query(const Prepared& q, const std::array<Database, kParties>& shares, const EngineOptions& opt);

/// Base columns of every table plus the proactive columns the plans read.
Manifest share_manifest(const Catalog& cat, const std::vector<PlanPtr>& plans);

}  // namespace secrecy
