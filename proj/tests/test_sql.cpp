#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "secrecy/engine.hpp"
#include "secrecy/error.hpp"
#include "secrecy/ingest.hpp"
#include "secrecy/oracle.hpp"
#include "secrecy/queries.hpp"
#include "secrecy/sql.hpp"

using namespace secrecy;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return Errc::BadFile;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

bool contains_op(const PlanNode& n, OpKind k) {
  if (n.op == k) return true;
  for (const auto& c : n.kids)
    if (contains_op(*c, k)) return true;
  return false;
}

PlainDb tiny_db() {
  PlainDb db;
  db["t"] = {{"a", "b"}, {{1, 10}, {2, 20}, {2, 30}, {5, 10}, {7, 40}}};
  db["u"] = {{"a", "c"}, {{2, 1}, {5, 2}, {9, 3}}};
  return db;
}

struct Run {
  Prepared prepared;
  Outcome outcome;
};

Run run_sql(const std::string& text, const PlainDb& db, EngineOptions eo, std::uint64_t seed = 3) {
  const Catalog cat = catalog_of(db);
  Prepared p = prepare(text, cat, eo);
  auto shares = share_database(db, share_manifest(cat, {p.plan}), seed);
  eo.run.seed = seed;
  Outcome o = execute_query(p, shares, eo);
  return {std::move(p), std::move(o)};
}

}  // namespace

TEST_CASE("parser accepts the supported dialect") {
  const auto q = sql::parse(
      "WITH r AS (SELECT pid, time, ROW_NUMBER() OVER (PARTITION BY pid ORDER BY time) AS rn FROM d) "
      "SELECT DISTINCT a.x, COUNT(*) AS n FROM t a JOIN u ON a.x = u.x WHERE a.y >= 3 AND u.z = 'abc' "
      "GROUP BY a.x HAVING COUNT(*) > 1 ORDER BY n DESC LIMIT 5");
  CHECK(q.with.size() == 1);
  CHECK(q.distinct);
  CHECK(q.select.size() == 2);
  CHECK(sql::output_name(q.select[1]) == "n");
  CHECK(q.from.size() == 2);
  CHECK(q.from[0].alias == "a");
  CHECK(q.on[1].has_value());
  CHECK(q.where->conjuncts().size() == 2);
  CHECK(q.group_by.size() == 1);
  CHECK(q.having.has_value());
  REQUIRE(q.order_by.size() == 1);
  CHECK(q.order_by[0].desc);
  CHECK(q.limit == std::size_t{5});

  const auto k = sql::parse("SELECT a FROM t WHERE b > 2 AND c = 'x'");
  const auto cs = k.where->conjuncts();
  REQUIRE(cs.size() == 2);
  CHECK(cs[1].rhs->kind == sql::SqlExpr::Kind::String);
  CHECK(sql::hash_string("x") == 0xaf63f54c86021707ULL);  // FNV-1a of "x"
  CHECK(sql::hash_string("") == 0xcbf29ce484222325ULL);
}

TEST_CASE("parser errors carry their kind and offset") {
  CHECK(code_of([] { sql::parse("SELECT a FROM t WHERE"); }) == Errc::SyntaxError);
  CHECK(message_of([] { sql::parse("SELECT a FROM t WHERE"); }).find("at offset 21") != std::string::npos);
  CHECK(code_of([] { sql::parse("SELECT a FROM"); }) == Errc::SyntaxError);
  CHECK(code_of([] { sql::parse("SELECT a FROM t WHERE a = 'open"); }) == Errc::SyntaxError);
  CHECK(code_of([] { sql::parse("SELECT a FROM t;;"); }) == Errc::SyntaxError);

  CHECK(code_of([] { sql::parse("SELECT * FROM t"); }) == Errc::UnsupportedFeature);
  CHECK_NOTHROW(sql::parse("SELECT * FROM t", false));
  CHECK(code_of([] { sql::parse("SELECT a FROM t LEFT JOIN u ON t.a = u.a"); }) == Errc::UnsupportedFeature);
  CHECK(code_of([] { sql::parse("SELECT a FROM t WHERE a NOT IN (SELECT a FROM u)"); }) == Errc::UnsupportedFeature);
  CHECK(code_of([] { sql::parse("SELECT a FROM t WHERE a IN (1, 2)"); }) == Errc::UnsupportedFeature);
  CHECK(code_of([] { sql::parse("SELECT SUM(COUNT(a)) FROM t"); }) == Errc::UnsupportedFeature);
  CHECK(code_of([] { sql::parse("SELECT RANK() OVER (ORDER BY a) FROM t"); }) == Errc::UnsupportedFeature);
  CHECK(code_of([] { sql::parse("SELECT a FROM t UNION SELECT a FROM u"); }) == Errc::UnsupportedFeature);
}

TEST_CASE("lowering places operators where the query puts them") {
  const Catalog cat = catalog_of(tiny_db());

  const auto semi = lower(sql::parse("SELECT DISTINCT a FROM t WHERE a IN (SELECT a FROM u)"), cat);
  CHECK(contains_op(*semi.plan, OpKind::SemiJoin));
  CHECK(contains_op(*semi.plan, OpKind::Distinct));
  CHECK(semi.plan->op == OpKind::Open);

  const auto grp = lower(sql::parse("SELECT a, COUNT(*) AS n FROM t GROUP BY a"), cat);
  CHECK(contains_op(*grp.plan, OpKind::GroupBy));
  REQUIRE(grp.columns.size() == 2);
  CHECK(grp.columns[1].name == "n");

  const auto avg = lower(sql::parse("SELECT AVG(b) AS m FROM t"), cat);
  REQUIRE(avg.columns.size() == 1);
  CHECK(avg.columns[0].average);
  CHECK(avg.columns[0].opened.size() == 2);

  const auto ord = lower(sql::parse("SELECT a, b FROM t ORDER BY b DESC LIMIT 2"), cat, false);
  CHECK(contains_op(*ord.plan, OpKind::Sort));

  const auto win = lower(sql::parse("WITH r AS (SELECT a, b, ROW_NUMBER() OVER (PARTITION BY a ORDER BY b) AS rn FROM t) "
                                    "SELECT DISTINCT r1.a FROM r r1 JOIN r r2 ON r1.a = r2.a AND r2.rn = r1.rn + 1 "
                                    "WHERE r2.b - r1.b >= 10"),
                         cat);
  CHECK(contains_op(*win.plan, OpKind::Adjacent));
  CHECK_FALSE(contains_op(*win.plan, OpKind::Join));

  // Raw rows would reveal more than the result: strict mode rejects them.
  CHECK(code_of([&] { lower(sql::parse("SELECT a FROM t WHERE b > 3"), cat); }) == Errc::UnsupportedFeature);
  CHECK_NOTHROW(lower(sql::parse("SELECT a FROM t WHERE b > 3"), cat, false));
  CHECK(code_of([&] { lower(sql::parse("SELECT zz FROM t GROUP BY zz"), cat); }) == Errc::UnknownColumn);
  CHECK(code_of([&] { lower(sql::parse("SELECT a FROM nope GROUP BY a"), cat); }) == Errc::UnknownTable);
  CHECK(code_of([&] { lower(sql::parse("SELECT a, b FROM t GROUP BY a"), cat); }) == Errc::UnsupportedFeature);
}

TEST_CASE("hand-checked results on a tiny database") {
  const PlainDb db = tiny_db();
  const EngineOptions eo;
  using R = std::vector<std::vector<std::int64_t>>;

  CHECK(run_sql("SELECT a, COUNT(*) AS n FROM t GROUP BY a ORDER BY a", db, eo).outcome.rows ==
        R{{1, 1}, {2, 2}, {5, 1}, {7, 1}});
  CHECK(oracle::sorted(run_sql("SELECT DISTINCT t.a FROM t JOIN u ON t.a = u.a", db, eo).outcome.rows) == R{{2}, {5}});
  CHECK(run_sql("SELECT SUM(b) AS s, MAX(b) AS m FROM t WHERE a IN (SELECT a FROM u)", db, eo).outcome.rows ==
        R{{60, 30}});
  CHECK(run_sql("SELECT AVG(b) AS m FROM t WHERE a = 2", db, eo).outcome.rows == R{{25}});
  CHECK(run_sql("SELECT COUNT(DISTINCT b) AS k FROM t", db, eo).outcome.rows == R{{4}});
  CHECK(run_sql("SELECT a, SUM(b) AS s FROM t GROUP BY a HAVING SUM(b) >= 40 ORDER BY s DESC", db, eo).outcome.rows ==
        R{{2, 50}, {7, 40}});
}

TEST_CASE("the eight benchmark queries match the oracle on 20 datasets each") {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t sizes[] = {4, 8, 16, 32, 64};
  for (const auto& bq : benchmark_queries()) {
    for (int d = 0; d < 20; ++d) {
      const std::size_t n = sizes[d % 5];
      const std::uint64_t seed = 1000 + 17 * static_cast<std::uint64_t>(d);
      CAPTURE(bq.name);
      CAPTURE(n);
      CAPTURE(seed);
      const PlainDb db = bq.data(n, seed);
      const auto want = oracle::eval(sql::parse(bq.sql), db);
      EngineOptions eo;
      const Run r = run_sql(bq.sql, db, eo, seed);
      CHECK(oracle::sorted(r.outcome.rows) == oracle::sorted(want.rows));
      CHECK(r.outcome.counters.rounds == r.prepared.cost.total.rounds);
      CHECK(r.outcome.counters.ops == r.prepared.cost.total.ops);
      if (n <= 16) {
        eo.optimize = false;
        const Run b = run_sql(bq.sql, db, eo, seed);
        CHECK(oracle::sorted(b.outcome.rows) == oracle::sorted(want.rows));
        CHECK(b.outcome.counters.rounds == b.prepared.cost.total.rounds);
      }
    }
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(seconds < 600.0);
}

TEST_CASE("--no-optimize on Q2 at n=16: same rows, strictly more rounds") {
  const auto& bq = benchmark_query("q2");
  const PlainDb db = bq.data(16, 42);
  EngineOptions opt;
  EngineOptions base;
  base.optimize = false;
  const Run o = run_sql(bq.sql, db, opt);
  const Run b = run_sql(bq.sql, db, base);
  CHECK(oracle::sorted(o.outcome.rows) == oracle::sorted(b.outcome.rows));
  CHECK(b.outcome.counters.rounds > o.outcome.counters.rounds);
  CHECK(b.prepared.rules.empty());
  CHECK_FALSE(o.prepared.rules.empty());
}

TEST_CASE("explain totals equal the measured totals, node by node") {
  for (const char* name : {"comorbidity", "recurrent-cdiff", "q1"}) {
    CAPTURE(name);
    const auto& bq = benchmark_query(name);
    const Run r = run_sql(bq.sql, bq.data(16, 7), EngineOptions{});
    const auto& pc = r.prepared.cost;
    REQUIRE(r.outcome.nodes.size() == pc.nodes.size());
    for (std::size_t i = 0; i < pc.nodes.size(); ++i) {
      CHECK(r.outcome.nodes[i].cost.ops == pc.nodes[i].cost.ops);
      CHECK(r.outcome.nodes[i].cost.rounds == pc.nodes[i].cost.rounds);
    }
    const std::string table = explain_table(pc);
    CHECK(table.find(std::to_string(r.outcome.counters.rounds)) != std::string::npos);
    const auto j = explain_json(*r.prepared.plan, pc, r.prepared.rules);
    CHECK(j.find("\"total\"") != std::string::npos);
  }
}

TEST_CASE("CSV ingestion") {
  StringTable strings;
  std::istringstream in("Id,Name,Score\n1,\"Smith, J\",10\n2,\"say \"\"hi\"\"\",-3\n3,plain,7\n");
  const PlainTable t = read_csv(in, strings);
  CHECK(t.columns == std::vector<std::string>{"id", "name", "score"});
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[0][1] == static_cast<std::int64_t>(sql::hash_string("Smith, J")));
  CHECK(t.rows[1][1] == static_cast<std::int64_t>(sql::hash_string("say \"hi\"")));
  CHECK(t.rows[1][2] == -3);
  CHECK(strings.lookup(t.rows[2][1]) == std::optional<std::string>("plain"));

  std::ostringstream out;
  write_csv(out, {"a", "b"}, {{"x,y", "q\"r"}});
  CHECK(out.str() == "a,b\n\"x,y\",\"q\"\"r\"\n");
  std::istringstream back(out.str());
  const PlainTable t2 = read_csv(back, strings);
  CHECK(strings.lookup(t2.rows[0][0]) == std::optional<std::string>("x,y"));

  std::istringstream ragged("a,b\n1,2\n3\n");
  CHECK(code_of([&] { read_csv(ragged, strings); }) == Errc::SchemaMismatch);
  std::istringstream bad("a\n\"open\n");
  CHECK(code_of([&] { read_csv(bad, strings); }) == Errc::BadFile);

  PlainDb db;
  db["t"] = {{"a"}, {{1}, {-1}}};
  CHECK(code_of([&] { check_sentinels(db); }) == Errc::SentinelCollision);
}

TEST_CASE("share files round-trip and pad to a power of two") {
  PlainDb db;
  db["t"] = {{"a", "b"}, {{1, 10}, {2, 20}, {2, 30}}};
  CHECK(padded_size(3) == 4);
  CHECK(padded_size(4) == 4);
  CHECK(padded_size(5) == 8);
  const Catalog cat = catalog_of(db);
  const EngineOptions eo;
  const std::string text = "SELECT a, SUM(b) AS s FROM t GROUP BY a ORDER BY a";
  const Prepared p = prepare(text, cat, eo);
  const auto shares = share_database(db, share_manifest(cat, {p.plan}), 11);
  CHECK(shares[0].at("t").live_rows == 3);
  CHECK(shares[0].at("t").padded_rows == 4);

  const auto dir = std::filesystem::temp_directory_path() / "secrecy_test_shares";
  std::filesystem::remove_all(dir);
  write_share_dir(dir, shares);
  std::array<Database, kParties> loaded;
  for (int i = 0; i < kParties; ++i) loaded[i] = read_share_dir(dir, i);
  const Catalog stored = catalog_of(loaded[0]);
  CHECK(stored.at("t").padded_rows == 4);
  const Outcome o = execute_query(prepare(text, stored, eo), loaded, eo);
  CHECK(o.rows == std::vector<std::vector<std::int64_t>>{{1, 10}, {2, 50}});
  std::filesystem::remove_all(dir);

  CHECK(code_of([&] { read_share_dir(dir, 0); }) == Errc::BadFile);
}
