#pragma once

#include <string>
#include <vector>

#include "secrecy/plan.hpp"
#include "secrecy/sql.hpp"

namespace secrecy {

/// One result column. AVG opens a sum and a count and divides after opening.
struct OutputColumn {
  std::string name;                // display name
  std::vector<std::string> opened;  // plan columns, two for AVG
  bool average = false;
};

struct Lowered {
  PlanPtr plan;  // rooted at Open
  std::vector<OutputColumn> columns;
};

/// Baseline plan of a parsed query: selections on single tables sit on their
/// scans, join conditions on their joins, IN becomes a semi-join, and the
/// ROW_NUMBER self-join pattern becomes a sort with an adjacent-row
/// comparison. ORDER BY breaks ties on the remaining output columns.
/// In strict mode every opened column must be a group key, an aggregate or a
/// DISTINCT output; other queries raise UnsupportedFeature.
Lowered lower(const sql::Query& q, const Catalog& cat, bool strict = true);

/// Result rows of an opened table in output order, with AVG divided out.
std::vector<std::vector<std::int64_t>> result_rows(const Lowered& l, const std::vector<std::string>& opened_names,
                                                   const std::vector<std::vector<std::int64_t>>& opened_rows);

}  // namespace secrecy
