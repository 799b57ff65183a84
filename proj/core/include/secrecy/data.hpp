#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "secrecy/plan.hpp"
#include "secrecy/primitives.hpp"
#include "secrecy/share_file.hpp"

namespace secrecy {

/// Cleartext relation as held by a data owner. Values are signed 64-bit.
struct PlainTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::int64_t>> rows;

  int index(const std::string& column) const;  // -1 when absent
};
using PlainDb = std::map<std::string, PlainTable>;

/// Value of a base column or of a derived c-K, K-c or c+K column.
/// Throws UnknownColumn.
std::int64_t column_value(const PlainTable& t, const std::vector<std::int64_t>& row, const std::string& column);

/// Columns to secret-share per table, including derived ones.
using Manifest = std::map<std::string, std::vector<std::string>>;

/// One party's shares of a base table, padded to a power of two with
/// sentinel rows.
struct StoredTable {
  std::vector<std::string> names;
  std::vector<SVec> cols;
  std::size_t live_rows = 0;
  std::size_t padded_rows = 0;
};
using Database = std::map<std::string, StoredTable>;

std::size_t padded_size(std::size_t live_rows);

Catalog catalog_of(const PlainDb& db);
/// Catalog of shared tables: only the stored columns are provided.
Catalog catalog_of(const Database& db);

/// Shares every manifest column of every table with a dealer seeded by seed.
std::array<Database, kParties> share_database(const PlainDb& db, const Manifest& manifest, std::uint64_t seed,
                                              unsigned width = kWordBits);

/// Conversions to and from the on-disk share matrix of one party.
ShareMatrix to_matrix(const StoredTable& t, int party);
StoredTable from_matrix(const ShareMatrix& m, std::vector<std::string> names, std::size_t live_rows, unsigned width);

}  // namespace secrecy

namespace secrecy {

/// Columns read by the Scan nodes of a plan, per table, in first-use order.
Manifest manifest_of(const PlanNode& plan);

}  // namespace secrecy
