#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "secrecy/data.hpp"

namespace secrecy {

/// Strings seen during ingestion, by their 64-bit hash. Two different strings
/// with one hash raise SchemaMismatch.
class StringTable {
 public:
  std::int64_t intern(const std::string& s);
  std::optional<std::string> lookup(std::int64_t v) const;

 private:
  std::map<std::int64_t, std::string> by_hash_;
};

/// RFC-4180 CSV with a header row. Integer fields are read as such, any other
/// field is hashed. Column names are lower-cased. Throws SchemaMismatch on
/// ragged rows and BadFile on malformed quoting.
PlainTable read_csv(std::istream& in, StringTable& strings, const std::string& source = "csv");
PlainTable read_csv_file(const std::filesystem::path& path, StringTable& strings);
/// Every *.csv file of dir, named by its stem.
PlainDb read_csv_dir(const std::filesystem::path& dir, StringTable& strings);

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);
void write_csv_file(const std::filesystem::path& path, const PlainTable& t);

/// Throws SentinelCollision when a live value equals the padding sentinel.
void check_sentinels(const PlainDb& db);

/// Per table: <table>.p1.srs .. <table>.p3.srs and <table>.json with the
/// column names and live / padded row counts.
void write_share_dir(const std::filesystem::path& dir, const std::array<Database, kParties>& shares);
Database read_share_dir(const std::filesystem::path& dir, int party, unsigned width = kWordBits);

}  // namespace secrecy
