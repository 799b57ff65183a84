#include "secrecy/share_file.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "secrecy/error.hpp"

namespace secrecy {

namespace {

static_assert(std::endian::native == std::endian::little, "share files assume a little-endian host");

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw Error(Errc::BadFile, "truncated share file");
  return v;
}

}  // namespace

void write_shares(std::ostream& os, const ShareMatrix& m) {
  const std::size_t cells = static_cast<std::size_t>(m.rows) * m.cols;
  if (m.lo.size() != cells || m.hi.size() != cells)
    throw Error(Errc::LengthMismatch, "share matrix size does not match rows x cols");
  os.write("SRS1", 4);
  put<std::uint8_t>(os, static_cast<std::uint8_t>(m.party + 1));
  put<std::uint8_t>(os, static_cast<std::uint8_t>(m.mode));
  put<std::uint64_t>(os, m.rows);
  put<std::uint16_t>(os, m.cols);
  for (std::size_t i = 0; i < cells; ++i) {
    put<Word>(os, m.lo[i]);
    put<Word>(os, m.hi[i]);
  }
}

ShareMatrix read_shares(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), 4) || std::memcmp(magic.data(), "SRS1", 4) != 0)
    throw Error(Errc::BadFile, "bad magic");
  ShareMatrix m;
  const auto party = get<std::uint8_t>(is);
  if (party < 1 || party > 3) throw Error(Errc::BadFile, "party id out of range");
  m.party = party - 1;
  const auto mode = get<std::uint8_t>(is);
  if (mode > 1) throw Error(Errc::BadFile, "unknown sharing mode");
  m.mode = static_cast<Mode>(mode);
  m.rows = get<std::uint64_t>(is);
  m.cols = get<std::uint16_t>(is);
  const std::size_t cells = static_cast<std::size_t>(m.rows) * m.cols;
  m.lo.resize(cells);
  m.hi.resize(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    m.lo[i] = get<Word>(is);
    m.hi[i] = get<Word>(is);
  }
  return m;
}

void write_share_file(const std::filesystem::path& path, const ShareMatrix& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(Errc::BadFile, "cannot open " + path.string());
  write_shares(os, m);
}

ShareMatrix read_share_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::BadFile, "cannot open " + path.string());
  return read_shares(is);
}

}  // namespace secrecy
