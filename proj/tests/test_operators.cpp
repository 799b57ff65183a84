#include <doctest.h>

#include "plan_harness.hpp"
#include "secrecy/error.hpp"
#include "secrecy/operators.hpp"

using namespace secrecy;
using test::Row;
using test::run_plan;

namespace {

ExprPtr col(const std::string& c, int side = 0) { return Expr::col(c, side); }
ExprPtr lit(std::int64_t v) { return Expr::constant(static_cast<Word>(v)); }
Pred cmp(CmpOp op, ExprPtr a, ExprPtr b) { return Pred::cmp(op, std::move(a), std::move(b)); }

PlanPtr node(PlanNode n) { return std::make_shared<const PlanNode>(std::move(n)); }

PlanPtr sort_node(PlanPtr in, std::vector<SortKey> keys, bool flag_unit = false, bool mask_keys = false,
                  std::optional<std::size_t> limit = {}) {
  PlanNode n = *make_sort(std::move(in), std::move(keys), limit);
  n.flag_unit = flag_unit;
  n.mask_keys = mask_keys;
  return node(std::move(n));
}

PlanPtr groupby_node(PlanPtr in, std::vector<std::string> keys, std::vector<AggSpec> aggs, bool dual,
                     bool presorted = false) {
  PlanNode n = *make_groupby(std::move(in), std::move(keys), std::move(aggs));
  n.dual = dual;
  n.presorted = presorted;
  return node(std::move(n));
}

PlanPtr distinct_node(PlanPtr in, std::vector<std::string> keys, DistinctMode m) {
  PlanNode n = *make_distinct(std::move(in), std::move(keys));
  n.mode = m;
  return node(std::move(n));
}

// Measured per-node counters equal the model, node by node.
void check_costs(const PlainDb& db, const PlanPtr& plan, const test::PlanRun& run, std::size_t batch_rows = 4096) {
  CostParams prm;
  prm.batch_rows = batch_rows;
  const PlanCost pc = cost_plan(*plan, catalog_of(db), prm);
  REQUIRE(pc.nodes.size() == run.nodes.size());
  for (std::size_t i = 0; i < pc.nodes.size(); ++i) {
    INFO("node " << describe(*pc.nodes[i].node));
    CHECK(run.nodes[i].cost.rounds == pc.nodes[i].cost.rounds);
    CHECK(run.nodes[i].cost.ops == pc.nodes[i].cost.ops);
  }
}

void check_rows(const PlainDb& db, const PlanPtr& plan, const test::PlanRun& run) {
  const oracle::Rows want = oracle::eval(*plan, db);
  CHECK(run.live.names == want.names);
  CHECK(oracle::sorted(run.live.rows) == oracle::sorted(want.rows));
}

void check_all(const PlainDb& db, const PlanPtr& plan, std::size_t batch_rows = 4096) {
  INFO(plan_to_text(*plan));
  auto run = run_plan(db, plan, batch_rows);
  check_costs(db, plan, run, batch_rows);
  check_rows(db, plan, run);
}

PlainDb one_table(std::size_t rows, std::uint64_t seed, std::int64_t lo = -3, std::int64_t hi = 4) {
  PlainDb db;
  db["r"] = test::random_table({"id", "a", "b"}, rows, lo, hi, seed);
  return db;
}

PlainDb two_tables(std::size_t n, std::size_t m, std::uint64_t seed) {
  PlainDb db;
  db["r"] = test::random_table({"id", "a"}, n, 0, 4, seed);
  db["s"] = test::random_table({"id", "b"}, m, 0, 4, seed + 100);
  return db;
}

PlanPtr scan_r(std::vector<std::string> cols = {"id", "a", "b"}) { return make_scan("r", "r", std::move(cols)); }

Task<oracle::Rows> sequential_groups(Party& p, PlanPtr sel, const Database* d, std::vector<AggSpec> aggs) {
  auto te = execute(p, sel, d, {});
  ExecResult r = co_await std::move(te);
  auto tg = ops::groupby_sequential(p, r.table, {"r.id"}, aggs);
  SharedTable g = co_await std::move(tg);
  auto to = ops::open(p, g, g.names);
  OpenedTable o = co_await std::move(to);
  oracle::Rows out;
  out.names = o.names;
  for (auto& row : o.rows) out.rows.emplace_back(row.begin(), row.end());
  co_return out;
}

}  // namespace

TEST_CASE("select: predicates of every kind match the model and the oracle") {
  for (std::size_t n : {4, 8, 16, 13}) {
    PlainDb db = one_table(n, n);
    std::vector<Pred> preds = {
        cmp(CmpOp::Eq, col("r.a"), lit(1)),
        cmp(CmpOp::Lt, col("r.a"), col("r.b")),
        Pred::conj({cmp(CmpOp::Ge, col("r.a"), lit(0)), cmp(CmpOp::Ne, col("r.b"), lit(2))}),
        Pred::disj({cmp(CmpOp::Gt, col("r.a"), lit(2)), Pred::negate(cmp(CmpOp::Le, col("r.id"), lit(1)))}),
        cmp(CmpOp::Ge, Expr::sub(col("r.a"), col("r.b")), lit(1)),
        cmp(CmpOp::Eq, Expr::add(col("r.a"), lit(2)), col("r.id")),
    };
    for (const auto& p : preds) check_all(db, make_select(scan_r(), p));
  }
}

TEST_CASE("select on a proactively shared difference is local") {
  PlainDb db = one_table(16, 3);
  PlanPtr plan = make_select(make_scan("r", "r", {"a", "a-2"}), Pred::sign("r.a-2"));
  auto run = run_plan(db, plan);
  CHECK(run.nodes.back().cost.rounds == 0);
  check_costs(db, plan, run);
  check_rows(db, plan, run);
}

TEST_CASE("join: equality and side predicates, with and without chunking") {
  for (std::size_t n : {4, 8, 16}) {
    PlainDb db = two_tables(n, n / 2 + 1, n);
    PlanNode j = *make_join(make_scan("r", "r", {"id", "a"}), make_scan("s", "s", {"id", "b"}),
                            cmp(CmpOp::Eq, col("r.id"), col("s.id")));
    check_all(db, node(j));
    j.left_pred = cmp(CmpOp::Gt, col("r.a"), lit(1));
    j.right_pred = cmp(CmpOp::Lt, col("s.b"), lit(3));
    check_all(db, node(j));
    check_all(db, node(j), 5);
  }
}

TEST_CASE("semijoin: membership, partial count and chunking") {
  SUBCASE("n=4, m=8 equality costs 4092 ops in 9 rounds") {
    PlainDb db;
    db["r"] = test::random_table({"id"}, 4, 0, 5, 1);
    db["s"] = test::random_table({"id"}, 8, 0, 5, 2);
    PlanPtr plan = make_semijoin(make_scan("r", "r", {"id"}), make_scan("s", "s", {"id"}),
                                 cmp(CmpOp::Eq, col("r.id"), col("s.id")));
    auto run = run_plan(db, plan);
    CHECK(run.nodes.back().cost.ops == 4092);
    CHECK(run.nodes.back().cost.rounds == 9);
    check_rows(db, plan, run);
  }
  for (std::size_t n : {4, 8, 16}) {
    PlainDb db = two_tables(n, n - 1, 10 + n);
    PlanNode sj = *make_semijoin(make_scan("r", "r", {"id", "a"}), make_scan("s", "s", {"id", "b"}),
                                 cmp(CmpOp::Eq, col("r.id"), col("s.id")));
    check_all(db, node(sj));
    sj.partial = AggSpec{AggFn::Count, "", "cnt"};
    sj.right_pred = cmp(CmpOp::Ge, col("s.b"), lit(1));
    check_all(db, node(sj));
    check_all(db, node(sj), 6);
    sj.left_pred = cmp(CmpOp::Ne, col("r.a"), lit(0));
    check_all(db, node(sj));
  }
}

TEST_CASE("sort: order, flags first, masking and limit") {
  SUBCASE("one column at n=8 costs 6216 ops in 48 rounds") {
    PlainDb db = one_table(8, 5);
    PlanPtr plan = sort_node(scan_r({"a"}), {{"r.a", false}});
    auto run = run_plan(db, plan);
    CHECK(run.nodes.back().cost.ops == 6216);
    CHECK(run.nodes.back().cost.rounds == 48);
  }
  for (std::size_t n : {4, 8, 16, 11}) {
    PlainDb db = one_table(n, 20 + n);
    PlanPtr sel = make_select(scan_r(), cmp(CmpOp::Ne, col("r.b"), lit(0)));
    for (PlanPtr plan : {sort_node(scan_r(), {{"r.a", false}, {"r.b", true}}),
                         sort_node(sel, {{"r.a", true}}, true),
                         sort_node(sel, {{"r.a", false}}, false, true),
                         sort_node(sel, {{"r.a", true}, {"r.id", false}}, true, false, 3)}) {
      check_all(db, plan);
      // physical order of the opened live rows follows the keys
      auto run = run_plan(db, plan);
      const auto want = oracle::eval(*plan, db);
      std::vector<Row> got_keys, want_keys;
      const int ia = run.live.index("r.a");
      for (const auto& r : run.live.rows) got_keys.push_back({r[static_cast<std::size_t>(ia)]});
      for (const auto& r : want.rows) want_keys.push_back({r[static_cast<std::size_t>(want.index("r.a"))]});
      CHECK(got_keys == want_keys);
    }
  }
  CHECK_THROWS_AS(
      [] {
        PlainDb db = one_table(8, 1);
        // a limit leaves 6 rows, which the second network cannot sort
        PlanPtr inner = sort_node(scan_r(), {{"r.a", false}}, false, false, 6);
        run_plan(db, sort_node(inner, {{"r.a", false}}));
      }(),
      Error);
}

TEST_CASE("shuffle keeps the multiset") {
  for (std::size_t n : {4, 8, 16}) {
    PlainDb db = one_table(n, 40 + n);
    check_all(db, make_shuffle(make_select(scan_r(), cmp(CmpOp::Lt, col("r.a"), lit(2)))));
  }
}

TEST_CASE("group-by: aggregates, dual sharing, presorted input") {
  const std::vector<AggSpec> all = {{AggFn::Count, "", "cnt"},
                                    {AggFn::Sum, "r.a", "s"},
                                    {AggFn::Min, "r.b", "lo"},
                                    {AggFn::Max, "r.b", "hi"},
                                    {AggFn::Avg, "r.a", "av"}};
  for (std::size_t n : {4, 8, 16}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      PlainDb db = one_table(n, 100 * n + seed, 0, 3);
      PlanPtr sel = make_select(scan_r(), cmp(CmpOp::Ne, col("r.b"), lit(1)));
      check_all(db, groupby_node(scan_r(), {"r.id"}, all, false));
      check_all(db, groupby_node(scan_r(), {"r.id"}, all, true));
      check_all(db, groupby_node(sel, {"r.id", "r.a"}, {{AggFn::Count, "", "cnt"}}, true));
      check_all(db, groupby_node(sort_node(sel, {{"r.id", false}}), {"r.id"}, all, true, true));
    }
  }
  SUBCASE("group spanning rows 1..3 of four") {
    PlainDb db;
    db["r"].columns = {"id", "a", "b"};
    db["r"].rows = {{0, 1, 1}, {1, 2, 2}, {1, 3, 3}, {1, 4, 4}};
    PlanPtr plan = groupby_node(scan_r(), {"r.id"}, {{AggFn::Count, "", "cnt"}, {AggFn::Sum, "r.a", "s"}}, true, true);
    auto run = run_plan(db, plan);
    CHECK(oracle::sorted(run.live.rows) == std::vector<Row>{{0, 1, 1}, {1, 3, 9}});
  }
}

TEST_CASE("group-by per-pass rounds: dual 4, ripple 66") {
  auto rounds = [](std::size_t n, bool dual) {
    PlainDb db = one_table(n, 9);
    PlanPtr plan = groupby_node(scan_r({"id"}), {"r.id"}, {{AggFn::Count, "", "cnt"}}, dual, true);
    return run_plan(db, plan).nodes.back().cost.rounds;
  };
  // one extra pass between n=2 and n=4; its equality test takes 6 rounds
  CHECK(rounds(4, true) - rounds(2, true) - 6 == 4);
  CHECK(rounds(4, false) - rounds(2, false) - 6 == 66);
}

TEST_CASE("sequential group-by agrees with the oracle and takes linear rounds") {
  for (std::size_t n : {4, 8, 16}) {
    PlainDb db = one_table(n, 300 + n, 0, 3);
    PlanPtr sel = make_select(scan_r(), cmp(CmpOp::Ne, col("r.b"), lit(1)));
    const std::vector<AggSpec> aggs = {{AggFn::Count, "", "cnt"}, {AggFn::Avg, "r.a", "av"}};
    auto shares = share_database(db, manifest_of(*sel), 3);
    auto res = run_parties({}, [&](Party& p) {
      return p.run(sequential_groups(p, sel, &shares[p.id()], aggs));
    });
    const auto want = oracle::eval(*groupby_node(sel, {"r.id"}, aggs, true), db);
    CHECK(oracle::sorted(res.values[0].rows) == oracle::sorted(want.rows));
  }
}

TEST_CASE("distinct: every mode") {
  for (std::size_t n : {4, 8, 16}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      PlainDb db = one_table(n, 500 * n + seed, 0, 3);
      PlanPtr sel = make_select(scan_r(), cmp(CmpOp::Ne, col("r.b"), lit(1)));
      check_all(db, distinct_node(sel, {"r.id"}, DistinctMode::Sequential));
      check_all(db, distinct_node(scan_r(), {"r.id", "r.a"}, DistinctMode::Sequential));
      check_all(db, distinct_node(sel, {"r.id"}, DistinctMode::Fused));
      check_all(db, distinct_node(sort_node(scan_r(), {{"r.id", false}}), {"r.id"}, DistinctMode::Uniform));
      check_all(db, distinct_node(sort_node(sel, {{"r.id", false}}), {"r.id"}, DistinctMode::OddEven));
    }
  }
  SUBCASE("fused distinct keeps one live row per key") {
    PlainDb db;
    db["r"].columns = {"id", "a", "b"};
    db["r"].rows = {{5, 1, 0}, {5, 0, 0}, {5, 1, 0}};
    PlanPtr plan = distinct_node(make_select(scan_r(), cmp(CmpOp::Eq, col("r.a"), lit(1))), {"r.id"},
                                 DistinctMode::Fused);
    auto run = run_plan(db, plan);
    CHECK(run.live.rows == std::vector<Row>{{5}});
  }
  SUBCASE("uniform distinct after sort costs one equality pass") {
    PlainDb db = one_table(8, 2);
    PlanPtr plan = distinct_node(sort_node(scan_r({"id"}), {{"r.id", false}}), {"r.id"}, DistinctMode::Uniform);
    auto run = run_plan(db, plan);
    CHECK(run.nodes.back().cost.rounds == 6);
  }
}

TEST_CASE("adjacent pairs") {
  for (std::size_t n : {4, 8, 16}) {
    PlainDb db = one_table(n, 700 + n, 0, 6);
    PlanPtr sorted = sort_node(scan_r(), {{"r.id", false}, {"r.a", false}});
    Pred p = Pred::conj({cmp(CmpOp::Eq, col("r.id", 0), col("r.id", 1)),
                         cmp(CmpOp::Ge, Expr::sub(col("r.a", 1), col("r.a", 0)), lit(2))});
    check_all(db, make_adjacent(sorted, p));
  }
}

TEST_CASE("global aggregates") {
  const std::vector<AggSpec> all = {{AggFn::Count, "", "cnt"},
                                    {AggFn::Sum, "r.a", "s"},
                                    {AggFn::Min, "r.b", "lo"},
                                    {AggFn::Max, "r.b", "hi"}};
  for (std::size_t n : {4, 8, 16, 5}) {
    PlainDb db = one_table(n, 900 + n);
    PlanPtr sel = make_select(scan_r(), cmp(CmpOp::Gt, col("r.a"), lit(-2)));
    for (bool dual : {false, true}) {
      PlanNode g = *make_global_agg(sel, all);
      g.dual = dual;
      check_all(db, node(g));
      PlanNode c = *make_global_agg(scan_r(), {{AggFn::Count, "", "cnt"}});
      c.dual = dual;
      check_all(db, node(c));
    }
  }
}

TEST_CASE("open reveals exactly the live rows") {
  for (std::size_t n : {4, 8, 16, 7}) {
    PlainDb db = one_table(n, 1100 + n);
    PlanPtr g = groupby_node(make_select(scan_r(), cmp(CmpOp::Ge, col("r.b"), lit(0))), {"r.id"},
                             {{AggFn::Count, "", "cnt"}, {AggFn::Sum, "r.a", "s"}}, true);
    PlanPtr plan = make_open(g, {"r.id", "cnt", "s"});
    auto run = run_plan(db, plan);
    check_costs(db, plan, run);
    REQUIRE(run.opened);
    std::vector<Row> got;
    for (auto& r : run.opened->rows) got.emplace_back(r.begin(), r.end());
    CHECK(oracle::sorted(got) == oracle::sorted(oracle::eval(*plan, db).rows));
  }
}

TEST_CASE("traces do not depend on the data") {
  PlanPtr plans[] = {
      make_open(groupby_node(make_select(scan_r(), cmp(CmpOp::Lt, col("r.a"), lit(1))), {"r.id"},
                             {{AggFn::Count, "", "c"}}, true),
                {"r.id", "c"}),
      distinct_node(make_select(scan_r(), cmp(CmpOp::Eq, col("r.b"), lit(2))), {"r.id"}, DistinctMode::Sequential),
      make_semijoin(scan_r(), make_scan("r", "q", {"id"}), cmp(CmpOp::Eq, col("r.id"), col("q.id"))),
  };
  for (const auto& plan : plans) {
    auto a = run_plan(one_table(8, 1, 0, 1), plan);
    auto b = run_plan(one_table(8, 2, -100, 100), plan);
    for (int i = 0; i < kParties; ++i) CHECK(a.traces[i].same_shape(b.traces[i]));
  }
}
