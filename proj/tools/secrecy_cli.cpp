#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "secrecy/engine.hpp"
#include "secrecy/error.hpp"
#include "secrecy/ingest.hpp"
#include "secrecy/oracle.hpp"
#include "secrecy/queries.hpp"

using namespace secrecy;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitQuery = 3;
constexpr int kExitProtocol = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const char* kDictionary = "dictionary.csv";

struct Common {
  std::string transport;
  double alpha = 1.0;
  double beta = 1000.0;
  std::size_t batch_rows = 4096;
  bool no_optimize = false;
  bool lax = false;
  std::uint64_t seed = 1;

  EngineOptions engine() const {
    EngineOptions eo;
    eo.planner.cost.alpha = alpha;
    eo.planner.cost.beta = beta;
    eo.planner.cost.batch_rows = batch_rows;
    eo.optimize = !no_optimize;
    eo.strict = !lax;
    eo.run.seed = seed;
    if (transport == "tcp")
      eo.run.transport = TransportKind::Tcp;
    else if (transport == "inproc" || transport.empty())
      eo.run.transport = TransportKind::InProcess;
    else
      throw UsageError("unknown transport " + transport + " (inproc or tcp)");
    return eo;
  }
};

void add_common(CLI::App& app, Common& c) {
  const char* env = std::getenv("SECRECY_TRANSPORT");
  c.transport = env ? env : "inproc";
  app.add_option("--transport", c.transport, "inproc or tcp (default: $SECRECY_TRANSPORT or inproc)");
  app.add_option("--alpha", c.alpha, "cost weight of one operation")->capture_default_str();
  app.add_option("--beta", c.beta, "cost weight of one round")->capture_default_str();
  app.add_option("--batch-rows", c.batch_rows, "rows per batch in join and group passes")->capture_default_str();
  app.add_flag("--no-optimize", c.no_optimize, "run the baseline plan");
  app.add_flag("--lax", c.lax, "allow results that open non-aggregated columns");
  app.add_option("--seed", c.seed, "seed of the share dealer and party randomness")->capture_default_str();
}

std::string read_text(const std::string& sql, const std::string& file) {
  if (!sql.empty() && !file.empty()) throw UsageError("give the query either inline or with --file");
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw Error(Errc::BadFile, "cannot read " + file);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  if (sql.empty()) throw UsageError("no query given");
  return sql;
}

// Tables as the three parties see them: from CSVs shared in-process, or read
// from a share directory.
struct Source {
  PlainDb plain;  // only with --data
  StringTable strings;
  Catalog catalog;
  std::array<Database, kParties> shares;
  fs::path share_dir;
  bool have_plain = false;
};

Source load_source(const std::string& data, const std::string& shares) {
  if (data.empty() == shares.empty()) throw UsageError("give exactly one of --data and --shares");
  Source s;
  if (!data.empty()) {
    s.plain = read_csv_dir(data, s.strings);
    check_sentinels(s.plain);
    s.catalog = catalog_of(s.plain);
    s.have_plain = true;
    return s;
  }
  s.share_dir = shares;
  for (int i = 0; i < kParties; ++i) s.shares[i] = read_share_dir(shares, i);
  s.catalog = catalog_of(s.shares[0]);
  const fs::path dict = fs::path(shares) / kDictionary;
  if (fs::exists(dict)) {
    StringTable tmp;
    const PlainTable t = read_csv_file(dict, tmp);
    const int vi = t.index("value");
    const int ti = t.index("text");
    if (vi < 0 || ti < 0) throw Error(Errc::SchemaMismatch, "dictionary needs value and text columns");
    for (const auto& row : t.rows)
      if (auto text = tmp.lookup(row[static_cast<std::size_t>(ti)]))
        if (s.strings.intern(*text) != row[static_cast<std::size_t>(vi)])
          throw Error(Errc::SchemaMismatch, "dictionary entry does not hash to its value: " + *text);
  }
  return s;
}

void share_in_process(Source& s, const std::vector<PlanPtr>& plans, std::uint64_t seed) {
  if (s.have_plain) s.shares = share_database(s.plain, share_manifest(s.catalog, plans), seed);
}

std::string cell(std::int64_t v, const StringTable& strings) {
  if (auto text = strings.lookup(v)) return *text;
  return std::to_string(v);
}

void print_rows(std::ostream& out, const std::vector<std::string>& names,
                const std::vector<std::vector<std::int64_t>>& rows, const StringTable& strings) {
  std::vector<std::vector<std::string>> text;
  for (const auto& r : rows) {
    std::vector<std::string> line;
    for (auto v : r) line.push_back(cell(v, strings));
    text.push_back(std::move(line));
  }
  write_csv(out, names, text);
}

int cmd_share_gen(const std::string& data, const std::string& out, const std::vector<std::string>& queries,
                  const std::vector<std::string>& files, const Common& c) {
  Source s = load_source(data, "");
  std::vector<PlanPtr> plans;
  std::vector<std::string> texts = queries;
  for (const auto& f : files) texts.push_back(read_text("", f));
  EngineOptions eo = c.engine();
  for (const auto& t : texts) {
    eo.optimize = true;
    plans.push_back(prepare(t, s.catalog, eo).plan);
  }
  share_in_process(s, plans, c.seed);
  write_share_dir(out, s.shares);
  std::vector<std::vector<std::string>> dict;
  for (const auto& [name, table] : s.plain)
    for (const auto& row : table.rows)
      for (auto v : row)
        if (auto text = s.strings.lookup(v)) dict.push_back({std::to_string(v), *text});
  std::sort(dict.begin(), dict.end());
  dict.erase(std::unique(dict.begin(), dict.end()), dict.end());
  std::ofstream d(fs::path(out) / kDictionary);
  write_csv(d, {"value", "text"}, dict);
  for (const auto& [name, t] : s.shares[0])
    std::cerr << name << ": " << t.live_rows << " rows padded to " << t.padded_rows << ", " << t.names.size()
              << " columns\n";
  return kExitOk;
}

int cmd_explain(const std::string& text, const std::string& data, const std::string& shares, bool json,
                const Common& c) {
  const Source s = load_source(data, shares);
  const Prepared p = prepare(text, s.catalog, c.engine());
  if (json) {
    std::cout << explain_json(*p.plan, p.cost, p.rules) << "\n";
  } else {
    std::cerr << plan_to_text(*p.plan) << "\n" << explain_table(p.cost);
    if (p.capped) std::cerr << "plan larger than the node cap; not optimized\n";
  }
  return kExitOk;
}

int cmd_run(const std::string& text, const std::string& data, const std::string& shares, const std::string& trace,
            bool explain, bool check_oracle, const Common& c) {
  Source s = load_source(data, shares);
  if (check_oracle && !s.have_plain) throw UsageError("--oracle needs --data");
  const EngineOptions eo = c.engine();
  const Prepared p = prepare(text, s.catalog, eo);
  share_in_process(s, {p.plan}, c.seed);
  const Outcome o = execute_query(p, s.shares, eo);
  print_rows(std::cout, o.names, o.rows, s.strings);

  if (explain) std::cerr << explain_table(p.cost);
  std::cerr << "rounds " << o.counters.rounds << ", ops " << o.counters.ops << ", bytes " << o.counters.bytes << ", "
            << o.seconds << " s\n";
  if (!trace.empty()) {
    std::ofstream out(trace);
    if (!out) throw Error(Errc::BadFile, "cannot write " + trace);
    for (const auto& t : o.traces) t.write_jsonl(out);
  }
  if (check_oracle) {
    const auto want = oracle::eval(sql::parse(text, eo.strict), s.plain);
    if (oracle::sorted(want.rows) != oracle::sorted(o.rows)) {
      std::cerr << "oracle: MISMATCH, expected\n";
      print_rows(std::cerr, o.names, want.rows, s.strings);
      return kExitProtocol;
    }
    std::cerr << "oracle: match (" << want.rows.size() << " rows)\n";
  }
  return kExitOk;
}

struct Measured {
  Counters counters;
  double seconds = 0;
  std::uint64_t predicted_rounds = 0;
  std::size_t max_rows = 0;
  bool matches = true;
  std::string rules;
};

Measured measure(const BenchQuery& bq, const PlainDb& db, bool optimize, const Common& c) {
  EngineOptions eo = c.engine();
  eo.optimize = optimize;
  const Catalog cat = catalog_of(db);
  const Prepared p = prepare(bq.sql, cat, eo);
  const auto shares = share_database(db, share_manifest(cat, {p.plan}), c.seed);
  const Outcome o = execute_query(p, shares, eo);
  Measured m;
  m.counters = o.counters;
  m.seconds = o.seconds;
  m.predicted_rounds = p.cost.total.rounds;
  for (const auto& n : p.cost.nodes) m.max_rows = std::max(m.max_rows, n.shape.rows);
  m.matches = oracle::sorted(o.rows) == oracle::sorted(oracle::eval(sql::parse(bq.sql), db).rows);
  for (const auto& r : p.rules) m.rules += (m.rules.empty() ? "" : " ") + r;
  return m;
}

int cmd_bench(const std::string& suite, const std::vector<std::size_t>& sizes, const std::string& format,
              const std::string& out_path, const Common& c) {
  std::vector<const BenchQuery*> queries;
  try {
    queries = benchmark_suite(suite);
  } catch (const Error&) {
    throw UsageError("unknown suite " + suite + " (medical, senate, micro or all)");
  }
  if (format != "csv" && format != "json") throw UsageError("--format is csv or json");
  nlohmann::json report = nlohmann::json::array();
  std::vector<std::vector<std::string>> rows;
  bool all_match = true;
  for (const BenchQuery* bq : queries) {
    for (std::size_t n : sizes) {
      const PlainDb db = bq->data(n, c.seed);
      for (bool optimized : {false, true}) {
        const Measured m = measure(*bq, db, optimized, c);
        all_match = all_match && m.matches;
        // Baselines that materialize a quadratic intermediate are flagged.
        const bool memory_bound = m.max_rows >= n * n;
        nlohmann::json j = {{"suite", bq->suite},
                            {"query", bq->name},
                            {"n", n},
                            {"plan", optimized ? "optimized" : "baseline"},
                            {"rounds", m.counters.rounds},
                            {"predicted_rounds", m.predicted_rounds},
                            {"ops", m.counters.ops},
                            {"bytes", m.counters.bytes},
                            {"seconds", m.seconds},
                            {"max_rows", m.max_rows},
                            {"memory_bound", memory_bound},
                            {"matches_oracle", m.matches},
                            {"rules", m.rules}};
        report.push_back(j);
        rows.push_back({bq->suite, bq->name, std::to_string(n), optimized ? "optimized" : "baseline",
                        std::to_string(m.counters.rounds), std::to_string(m.predicted_rounds),
                        std::to_string(m.counters.ops), std::to_string(m.counters.bytes), std::to_string(m.seconds),
                        std::to_string(m.max_rows), memory_bound ? "1" : "0", m.matches ? "1" : "0", m.rules});
        std::cerr << bq->name << " n=" << n << " " << (optimized ? "optimized" : "baseline") << ": "
                  << m.counters.rounds << " rounds, " << m.seconds << " s\n";
      }
    }
  }
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw Error(Errc::BadFile, "cannot write " + out_path);
  }
  std::ostream& out = out_path.empty() ? std::cout : file;
  if (format == "json")
    out << report.dump(2) << "\n";
  else
    write_csv(out,
              {"suite", "query", "n", "plan", "rounds", "predicted_rounds", "ops", "bytes", "seconds", "max_rows",
               "memory_bound", "matches_oracle", "rules"},
              rows);
  return all_match ? kExitOk : kExitProtocol;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Three-party secret-shared SQL engine"};
  app.require_subcommand(1);

  Common c;
  std::string sql_text, file, data, shares, trace, out, format = "csv", suite = "all";
  std::vector<std::string> queries, query_files;
  std::vector<std::size_t> sizes{16, 64};
  bool json = false, explain = false, check_oracle = false;

  auto* gen = app.add_subcommand("share-gen", "secret-share a directory of CSV files");
  gen->add_option("--data", data, "directory of <table>.csv files")->required();
  gen->add_option("--out", out, "output share directory")->required();
  gen->add_option("--query", queries, "queries whose derived columns to share as well");
  gen->add_option("--query-file", query_files, "files holding such queries");
  add_common(*gen, c);

  auto* run = app.add_subcommand("run", "run a query on three parties and print the result as CSV");
  run->add_option("sql", sql_text, "query text");
  run->add_option("--file", file, "read the query from a file");
  run->add_option("--data", data, "CSV directory, shared in-process");
  run->add_option("--shares", shares, "share directory written by share-gen");
  run->add_option("--trace", trace, "write per-round message traces of all parties as JSON lines");
  run->add_flag("--explain", explain, "print the per-node cost table to stderr");
  run->add_flag("--oracle", check_oracle, "compare with the plaintext evaluation (needs --data)");
  add_common(*run, c);

  auto* exp = app.add_subcommand("explain", "print the plan and its per-node cost");
  exp->add_option("sql", sql_text, "query text");
  exp->add_option("--file", file, "read the query from a file");
  exp->add_option("--data", data, "CSV directory");
  exp->add_option("--shares", shares, "share directory");
  exp->add_flag("--json", json, "print JSON to stdout instead of the table");
  add_common(*exp, c);

  auto* bench = app.add_subcommand("bench", "measure the benchmark queries, baseline against optimized");
  bench->add_option("--suite", suite, "medical, senate, micro or all")->capture_default_str();
  bench->add_option("--sizes", sizes, "rows per relation")->delimiter(',');
  bench->add_option("--format", format, "csv or json")->capture_default_str();
  bench->add_option("--out", out, "write the report here instead of stdout");
  add_common(*bench, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_share_gen(data, out, queries, query_files, c);
    if (run->parsed())
      return cmd_run(read_text(sql_text, file), data, shares, trace, explain, check_oracle, c);
    if (exp->parsed()) return cmd_explain(read_text(sql_text, file), data, shares, json, c);
    if (bench->parsed()) return cmd_bench(suite, sizes, format, out, c);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_protocol_error(e.code()) ? kExitProtocol : kExitQuery;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitProtocol;
  }
  return kExitUsage;
}
