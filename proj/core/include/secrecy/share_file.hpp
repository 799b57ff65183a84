#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "secrecy/share.hpp"

namespace secrecy {

/// One party's shares of a table, row-major. On disk:
///   "SRS1" | party u8 (1..3) | mode u8 | rows u64 | cols u16 | (lo, hi) u64 pairs
/// all little-endian.
struct ShareMatrix {
  int party = 0;  // 0-based in memory
  Mode mode = Mode::Boolean;
  std::uint64_t rows = 0;
  std::uint16_t cols = 0;
  std::vector<Word> lo;
  std::vector<Word> hi;

  ReplicatedShare at(std::uint64_t r, std::uint16_t c) const {
    const auto i = r * cols + c;
    return {lo[i], hi[i], mode};
  }
};

void write_shares(std::ostream& os, const ShareMatrix& m);
ShareMatrix read_shares(std::istream& is);

void write_share_file(const std::filesystem::path& path, const ShareMatrix& m);
ShareMatrix read_share_file(const std::filesystem::path& path);

}  // namespace secrecy
