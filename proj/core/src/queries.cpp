#include "secrecy/queries.hpp"

#include <algorithm>
#include <random>

#include "secrecy/error.hpp"
#include "secrecy/sql.hpp"

namespace secrecy {

namespace {

using Rng = std::mt19937_64;

std::int64_t uniform(Rng& g, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(g);
}

std::int64_t pick(Rng& g, const std::vector<std::string>& words) {
  return static_cast<std::int64_t>(sql::hash_string(words[static_cast<std::size_t>(uniform(g, 0, std::int64_t(words.size()) - 1))]));
}

std::int64_t patients(std::size_t n) { return std::max<std::int64_t>(2, static_cast<std::int64_t>(n) / 4); }

PlainTable diagnosis(std::size_t n, Rng& g) {
  PlainTable t{{"pid", "diag", "time"}, {}};
  for (std::size_t i = 0; i < n; ++i)
    t.rows.push_back({uniform(g, 0, patients(n) - 1), pick(g, {"cdiff", "cdiff", "hd", "flu", "asthma"}), uniform(g, 0, 120)});
  return t;
}

PlainDb comorbidity(std::size_t n, std::uint64_t seed) {
  Rng g(seed);
  PlainDb db;
  db["diagnosis"] = diagnosis(n, g);
  // A cohort of a quarter of the diagnosis cardinality: 16 patients at 64 rows.
  std::vector<std::int64_t> ids(static_cast<std::size_t>(patients(n)) * 2);
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<std::int64_t>(i);
  std::shuffle(ids.begin(), ids.end(), g);
  PlainTable c{{"pid"}, {}};
  for (std::size_t i = 0; i < std::max<std::size_t>(1, n / 4); ++i) c.rows.push_back({ids[i]});
  db["cdiff_cohort"] = c;
  return db;
}

PlainDb cdiff(std::size_t n, std::uint64_t seed) {
  Rng g(seed);
  PlainDb db;
  db["diagnosis"] = diagnosis(n, g);
  return db;
}

PlainDb aspirin(std::size_t n, std::uint64_t seed) {
  Rng g(seed);
  PlainDb db;
  db["diagnosis"] = diagnosis(n, g);
  PlainTable m{{"pid", "med", "time"}, {}};
  for (std::size_t i = 0; i < n; ++i)
    m.rows.push_back({uniform(g, 0, patients(n) - 1), pick(g, {"aspirin", "aspirin", "statin", "insulin"}), uniform(g, 0, 120)});
  db["medication"] = m;
  return db;
}

PlainDb passwords(std::size_t n, std::uint64_t seed) {
  Rng g(seed);
  PlainTable t{{"id", "pwd"}, {}};
  for (std::size_t i = 0; i < n; ++i)
    t.rows.push_back({uniform(g, 0, patients(n) - 1), pick(g, {"hunter2", "123456", "password", "letmein", "qwerty"})});
  return {{"passwords", t}};
}

PlainDb credit(std::size_t n, std::uint64_t seed) {
  Rng g(seed);
  PlainTable t{{"id", "cs", "year"}, {}};
  for (std::size_t i = 0; i < n; ++i) t.rows.push_back({uniform(g, 0, patients(n) - 1), uniform(g, 300, 850), uniform(g, 2018, 2019)});
  return {{"credit", t}};
}

PlainDb micro(std::size_t n, std::uint64_t seed) {
  Rng g(seed);
  const auto keys = static_cast<std::int64_t>(n);
  PlainTable r{{"id", "ak", "a"}, {}}, s{{"id", "b"}, {}};
  for (std::size_t i = 0; i < n; ++i) r.rows.push_back({uniform(g, 0, keys - 1), uniform(g, 0, 3), uniform(g, 0, 9)});
  for (std::size_t i = 0; i < n; ++i) s.rows.push_back({uniform(g, 0, keys - 1), uniform(g, 0, 9)});
  return {{"r", r}, {"s", s}};
}

}  // namespace

const std::vector<BenchQuery>& benchmark_queries() {
  static const std::vector<BenchQuery> q = {
      {"comorbidity", "medical",
       "SELECT diag, COUNT(*) AS cnt FROM diagnosis WHERE pid IN (SELECT pid FROM cdiff_cohort) "
       "GROUP BY diag ORDER BY cnt DESC LIMIT 10",
       &comorbidity},
      {"recurrent-cdiff", "medical",
       "WITH rcd AS (SELECT pid, time, ROW_NUMBER() OVER (PARTITION BY pid ORDER BY time) AS row_no "
       "FROM diagnosis WHERE diag = 'cdiff') "
       "SELECT DISTINCT r1.pid FROM rcd r1 JOIN rcd r2 ON r1.pid = r2.pid "
       "WHERE r2.time - r1.time >= 15 DAYS AND r2.time - r1.time <= 56 DAYS AND r2.row_no = r1.row_no + 1",
       &cdiff},
      {"aspirin-count", "medical",
       "SELECT COUNT(DISTINCT d.pid) FROM diagnosis AS d JOIN medication AS m ON d.pid = m.pid "
       "WHERE d.diag = 'hd' AND m.med = 'aspirin' AND d.time <= m.time",
       &aspirin},
      {"password-reuse", "senate", "SELECT id FROM passwords GROUP BY CONCAT(id, pwd) HAVING COUNT(*) > 1",
       &passwords},
      {"credit-score", "senate",
       "SELECT s.id FROM (SELECT id, MIN(cs) AS cs1, MAX(cs) AS cs2 FROM credit WHERE year = 2019 GROUP BY id) AS s "
       "WHERE s.cs2 - s.cs1 > 100",
       &credit},
      {"q1", "micro", "SELECT DISTINCT r.id FROM r, s WHERE r.id = s.id", &micro},
      {"q2", "micro", "SELECT r.ak, COUNT(*) FROM r, s WHERE r.id = s.id GROUP BY r.ak", &micro},
      {"q3", "micro", "SELECT DISTINCT id FROM r WHERE ak = 2", &micro},
  };
  return q;
}

const BenchQuery& benchmark_query(const std::string& name) {
  for (const auto& q : benchmark_queries())
    if (q.name == name) return q;
  throw Error(Errc::UnknownTable, "no benchmark query " + name);
}

std::vector<const BenchQuery*> benchmark_suite(const std::string& suite) {
  std::vector<const BenchQuery*> out;
  for (const auto& q : benchmark_queries())
    if (suite == "all" || q.suite == suite) out.push_back(&q);
  if (out.empty()) throw Error(Errc::UnknownTable, "no benchmark suite " + suite);
  return out;
}

}  // namespace secrecy
