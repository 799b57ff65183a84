#include "secrecy/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "secrecy/error.hpp"
#include "secrecy/sql.hpp"

namespace secrecy {

std::int64_t StringTable::intern(const std::string& s) {
  const auto h = static_cast<std::int64_t>(sql::hash_string(s));
  auto [it, fresh] = by_hash_.try_emplace(h, s);
  if (!fresh && it->second != s)
    throw Error(Errc::SchemaMismatch, "strings '" + it->second + "' and '" + s + "' hash alike");
  return h;
}

std::optional<std::string> StringTable::lookup(std::int64_t v) const {
  auto it = by_hash_.find(v);
  if (it == by_hash_.end()) return std::nullopt;
  return it->second;
}

namespace {

// One record; false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields, const std::string& source, std::size_t line) {
  fields.clear();
  std::string field;
  bool quoted = false, any = false, was_quoted = false;
  for (int c; (c = in.get()) != EOF;) {
    any = true;
    if (quoted) {
      if (c != '"') {
        field += static_cast<char>(c);
      } else if (in.peek() == '"') {
        field += '"';
        in.get();
      } else {
        quoted = false;
      }
      continue;
    }
    if (c == '"') {
      if (!field.empty() || was_quoted)
        throw Error(Errc::BadFile, source + ":" + std::to_string(line) + ": quote inside an unquoted field");
      quoted = was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && in.peek() == '\n') in.get();
      fields.push_back(std::move(field));
      return true;
    } else {
      if (was_quoted) throw Error(Errc::BadFile, source + ":" + std::to_string(line) + ": text after a closing quote");
      field += static_cast<char>(c);
    }
  }
  if (quoted) throw Error(Errc::BadFile, source + ": unterminated quote");
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

std::optional<std::int64_t> as_int(const std::string& s) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

PlainTable read_csv(std::istream& in, StringTable& strings, const std::string& source) {
  PlainTable t;
  std::vector<std::string> fields;
  if (!read_record(in, fields, source, 1)) throw Error(Errc::SchemaMismatch, source + ": missing header row");
  for (auto& f : fields) {
    std::transform(f.begin(), f.end(), f.begin(), [](unsigned char c) { return std::tolower(c); });
    if (f.empty()) throw Error(Errc::SchemaMismatch, source + ": empty column name");
    t.columns.push_back(f);
  }
  for (std::size_t line = 2; read_record(in, fields, source, line); ++line) {
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    if (fields.size() != t.columns.size())
      throw Error(Errc::SchemaMismatch, source + ":" + std::to_string(line) + ": expected " +
                                            std::to_string(t.columns.size()) + " fields, got " +
                                            std::to_string(fields.size()));
    std::vector<std::int64_t> row;
    for (const auto& f : fields) {
      auto v = as_int(f);
      row.push_back(v ? *v : strings.intern(f));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

PlainTable read_csv_file(const std::filesystem::path& path, StringTable& strings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::BadFile, "cannot open " + path.string());
  return read_csv(in, strings, path.string());
}

PlainDb read_csv_dir(const std::filesystem::path& dir, StringTable& strings) {
  PlainDb db;
  if (!std::filesystem::is_directory(dir)) throw Error(Errc::BadFile, dir.string() + " is not a directory");
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.path().extension() == ".csv") db[e.path().stem().string()] = read_csv_file(e.path(), strings);
  return db;
}

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << quote(r[i]);
    out << "\n";
  };
  line(header);
  for (const auto& r : rows) line(r);
}

void write_csv_file(const std::filesystem::path& path, const PlainTable& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::BadFile, "cannot write " + path.string());
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : t.rows) {
    std::vector<std::string> s;
    for (auto v : r) s.push_back(std::to_string(v));
    rows.push_back(std::move(s));
  }
  write_csv(out, t.columns, rows);
}

void check_sentinels(const PlainDb& db) {
  for (const auto& [name, t] : db)
    for (std::size_t r = 0; r < t.rows.size(); ++r)
      for (std::size_t c = 0; c < t.columns.size(); ++c)
        if (static_cast<Word>(t.rows[r][c]) == kSentinel)
          throw Error(Errc::SentinelCollision, name + "." + t.columns[c] + " row " + std::to_string(r + 1) +
                                                   " holds the padding value");
}

void write_share_dir(const std::filesystem::path& dir, const std::array<Database, kParties>& shares) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, t] : shares[0]) {
    nlohmann::json meta = {{"columns", t.names}, {"live_rows", t.live_rows}, {"padded_rows", t.padded_rows}};
    std::ofstream(dir / (name + ".json")) << meta.dump(2) << "\n";
    for (int p = 0; p < kParties; ++p)
      write_share_file(dir / (name + ".p" + std::to_string(p + 1) + ".srs"), to_matrix(shares[p].at(name), p));
  }
}

Database read_share_dir(const std::filesystem::path& dir, int party, unsigned width) {
  Database db;
  if (!std::filesystem::is_directory(dir)) throw Error(Errc::BadFile, dir.string() + " is not a directory");
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() != ".json") continue;
    const std::string name = e.path().stem().string();
    nlohmann::json meta;
    try {
      std::ifstream(e.path()) >> meta;
    } catch (const nlohmann::json::exception& ex) {
      throw Error(Errc::BadFile, e.path().string() + ": " + ex.what());
    }
    const ShareMatrix m = read_share_file(dir / (name + ".p" + std::to_string(party + 1) + ".srs"));
    if (m.party != party) throw Error(Errc::BadFile, name + ": share file of another party");
    StoredTable t = from_matrix(m, meta.at("columns").get<std::vector<std::string>>(),
                                meta.at("live_rows").get<std::size_t>(), width);
    if (t.padded_rows != meta.at("padded_rows").get<std::size_t>())
      throw Error(Errc::SchemaMismatch, name + ": row count differs from its metadata");
    db[name] = std::move(t);
  }
  return db;
}

}  // namespace secrecy
