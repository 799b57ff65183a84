#pragma once

#include <optional>
#include <string>
#include <vector>

#include "secrecy/party.hpp"
#include "secrecy/plan.hpp"
#include "secrecy/table.hpp"
#include "secrecy/task.hpp"

namespace secrecy::ops {

// Every operator follows the phase structure priced by cost_operator, so
// measured rounds equal the model's. Tables are taken by value.

SharedTable project(SharedTable t, const std::vector<std::string>& cols);
Task<SharedTable> select(Party& p, SharedTable t, Pred pred);

struct JoinSpec {
  Pred theta;
  Pred left_pred;
  Pred right_pred;
  std::optional<AggSpec> partial;  // semijoin only
  std::size_t batch_rows = 4096;
};
Task<SharedTable> join(Party& p, SharedTable l, SharedTable r, JoinSpec spec);
Task<SharedTable> semijoin(Party& p, SharedTable l, SharedTable r, JoinSpec spec);

struct SortSpec {
  std::vector<SortKey> keys;
  bool flag_unit = false;
  bool mask_keys = false;
  std::optional<std::size_t> limit;
};
Task<SharedTable> sort(Party& p, SharedTable t, SortSpec spec);
Task<SharedTable> shuffle(Party& p, SharedTable t);

Task<SharedTable> distinct(Party& p, SharedTable t, std::vector<std::string> keys, DistinctMode mode);
Task<SharedTable> adjacent(Party& p, SharedTable t, Pred pred);

Task<SharedTable> groupby(Party& p, SharedTable t, std::vector<std::string> keys, std::vector<AggSpec> aggs,
                          bool presorted, bool dual);
/// Sort followed by one aggregation step per adjacent pair in row order, each
/// depending on the previous one. Supports COUNT, SUM and AVG.
Task<SharedTable> groupby_sequential(Party& p, SharedTable t, std::vector<std::string> keys,
                                     std::vector<AggSpec> aggs);
Task<SharedTable> global_agg(Party& p, SharedTable t, std::vector<AggSpec> aggs, bool dual);

/// Moves dead rows toward the sentinel and keeps them flagged.
Task<SharedTable> mask(Party& p, SharedTable t);
/// Masks, then reveals the listed columns and the live bit.
Task<OpenedTable> open(Party& p, SharedTable t, std::vector<std::string> cols);

}  // namespace secrecy::ops
