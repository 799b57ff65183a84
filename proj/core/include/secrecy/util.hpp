#pragma once

#include <bit>
#include <cstdint>

namespace secrecy {

constexpr unsigned ceil_log2(std::uint64_t n) { return n <= 1 ? 0 : static_cast<unsigned>(std::bit_width(n - 1)); }
constexpr bool is_pow2(std::uint64_t n) { return n != 0 && (n & (n - 1)) == 0; }
constexpr std::uint64_t next_pow2(std::uint64_t n) { return n <= 1 ? 1 : std::uint64_t{1} << ceil_log2(n); }

}  // namespace secrecy
