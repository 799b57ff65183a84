#pragma once

#include <optional>
#include <vector>

#include "secrecy/data.hpp"
#include "secrecy/party.hpp"
#include "secrecy/plan.hpp"
#include "secrecy/table.hpp"

namespace secrecy {

struct ExecOptions {
  std::size_t batch_rows = 4096;
};

/// Counters spent by one node alone, in evaluation order.
struct NodeRun {
  const PlanNode* node = nullptr;
  int depth = 0;
  Counters cost;
};

struct ExecResult {
  SharedTable table;                  // root output (input of Open when the root opens)
  std::optional<OpenedTable> opened;  // set when the root is Open
  std::vector<NodeRun> nodes;
};

/// Runs plan on this party's shares. Open may only appear at the root.
Task<ExecResult> execute(Party& p, PlanPtr plan, const Database* db, ExecOptions opt);

/// Table read by a Scan: qualified columns and the public validity flag.
SharedTable scan_table(const Party& p, const PlanNode& scan, const Database& db);

}  // namespace secrecy
