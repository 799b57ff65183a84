#include "secrecy/data.hpp"

#include <algorithm>
#include <charconv>

#include "secrecy/error.hpp"
#include "secrecy/util.hpp"

namespace secrecy {

int PlainTable::index(const std::string& column) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == column) return static_cast<int>(i);
  return -1;
}

namespace {

bool parse_int(std::string_view s, std::int64_t& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

std::int64_t column_value(const PlainTable& t, const std::vector<std::int64_t>& row, const std::string& column) {
  if (int i = t.index(column); i >= 0) return row[static_cast<std::size_t>(i)];
  std::int64_t k = 0;
  for (std::size_t pos = 1; pos < column.size(); ++pos) {
    const char ch = column[pos];
    if (ch != '+' && ch != '-') continue;
    const int base = t.index(column.substr(0, pos));
    if (base >= 0 && parse_int(std::string_view(column).substr(pos + 1), k)) {
      const auto u = static_cast<std::uint64_t>(row[static_cast<std::size_t>(base)]);
      const auto uk = static_cast<std::uint64_t>(k);
      return static_cast<std::int64_t>(ch == '+' ? u + uk : u - uk);
    }
  }
  const auto dash = column.find('-', column.empty() || column[0] != '-' ? 0 : 1);
  if (dash != std::string::npos && parse_int(std::string_view(column).substr(0, dash), k)) {
    const int base = t.index(column.substr(dash + 1));
    if (base >= 0)
      return static_cast<std::int64_t>(static_cast<std::uint64_t>(k) -
                                       static_cast<std::uint64_t>(row[static_cast<std::size_t>(base)]));
  }
  throw Error(Errc::UnknownColumn, column);
}

std::size_t padded_size(std::size_t live_rows) { return next_pow2(std::max<std::size_t>(live_rows, 1)); }

Catalog catalog_of(const PlainDb& db) {
  Catalog c;
  for (const auto& [name, t] : db) c.tables[name] = {t.columns, t.rows.size(), padded_size(t.rows.size())};
  return c;
}

Catalog catalog_of(const Database& db) {
  Catalog c;
  for (const auto& [name, t] : db) c.tables[name] = {t.names, t.live_rows, t.padded_rows, false};
  return c;
}

std::array<Database, kParties> share_database(const PlainDb& db, const Manifest& manifest, std::uint64_t seed,
                                              unsigned width) {
  Prg dealer(Prg::derive(seed, 0x5a5e));
  const Word mask = width >= 64 ? ~Word{0} : (Word{1} << width) - 1;
  std::array<Database, kParties> out;
  for (const auto& [name, cols] : manifest) {
    auto it = db.find(name);
    if (it == db.end()) throw Error(Errc::UnknownTable, name);
    const PlainTable& t = it->second;
    const std::size_t live = t.rows.size(), padded = padded_size(live);
    for (auto& party : out) {
      StoredTable& st = party[name];
      st.names = cols;
      st.live_rows = live;
      st.padded_rows = padded;
    }
    for (const auto& col : cols) {
      std::array<SVec, kParties> held;
      for (auto& h : held) h = SVec(padded, Mode::Boolean, width);
      for (std::size_t r = 0; r < padded; ++r) {
        const Word v = r < live ? static_cast<Word>(column_value(t, t.rows[r], col)) & mask : mask;
        auto sh = share(v, Mode::Boolean, dealer);
        for (int i = 0; i < kParties; ++i) held[i].set(r, sh[i]);
      }
      for (int i = 0; i < kParties; ++i) out[i][name].cols.push_back(std::move(held[i]));
    }
  }
  return out;
}

ShareMatrix to_matrix(const StoredTable& t, int party) {
  ShareMatrix m;
  m.party = party;
  m.mode = Mode::Boolean;
  m.rows = t.padded_rows;
  m.cols = static_cast<std::uint16_t>(t.cols.size());
  m.lo.resize(m.rows * m.cols);
  m.hi.resize(m.rows * m.cols);
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) {
      m.lo[r * m.cols + c] = t.cols[c].lo[r];
      m.hi[r * m.cols + c] = t.cols[c].hi[r];
    }
  return m;
}

StoredTable from_matrix(const ShareMatrix& m, std::vector<std::string> names, std::size_t live_rows, unsigned width) {
  if (names.size() != m.cols) throw Error(Errc::SchemaMismatch, "share file column count differs from its header");
  StoredTable t;
  t.names = std::move(names);
  t.live_rows = live_rows;
  t.padded_rows = m.rows;
  for (std::size_t c = 0; c < m.cols; ++c) {
    SVec v(m.rows, m.mode, width);
    for (std::size_t r = 0; r < m.rows; ++r) v.set(r, m.at(r, static_cast<std::uint16_t>(c)));
    t.cols.push_back(std::move(v));
  }
  return t;
}

}  // namespace secrecy

namespace secrecy {

namespace {

void collect(const PlanNode& n, Manifest& m) {
  if (n.op == OpKind::Scan) {
    auto& cols = m[n.table];
    for (const auto& c : n.cols)
      if (std::find(cols.begin(), cols.end(), c) == cols.end()) cols.push_back(c);
  }
  for (const auto& k : n.kids) collect(*k, m);
}

}  // namespace

Manifest manifest_of(const PlanNode& plan) {
  Manifest m;
  collect(plan, m);
  return m;
}

}  // namespace secrecy
