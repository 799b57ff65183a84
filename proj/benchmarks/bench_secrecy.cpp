#include <benchmark/benchmark.h>

#include <numeric>

#include "secrecy/engine.hpp"
#include "secrecy/operators.hpp"
#include "secrecy/queries.hpp"

using namespace secrecy;

namespace {

void report(benchmark::State& state, const Counters& c) {
  state.counters["rounds"] = static_cast<double>(c.rounds);
  state.counters["ops"] = static_cast<double>(c.ops);
  state.counters["bytes"] = static_cast<double>(c.bytes);
}

// Runtime: one exchange of n payloads, batched into one message or sent one
// message per payload.
void BM_Exchange(benchmark::State& state, Delivery delivery) {
  const auto n = static_cast<std::size_t>(state.range(0));
  RunOptions opt;
  opt.delivery = delivery;
  Counters c;
  for (auto _ : state) {
    auto res = run_parties(opt, [n](Party& p) {
      std::vector<Word> v(n);
      std::iota(v.begin(), v.end(), Word{0});
      return p.exchange(std::move(v));
    });
    c = res.counters[0];
    benchmark::DoNotOptimize(res.values[0].data());
  }
  report(state, c);
}
BENCHMARK_CAPTURE(BM_Exchange, batched, Delivery::Batched)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Exchange, eager, Delivery::Eager)->Arg(10000)->Unit(benchmark::kMillisecond);

Task<SVec> gate(Party& p, int which, std::size_t n) {
  SVec x = gates::random(p, n, Mode::Boolean, kWordBits);
  SVec y = gates::random(p, n, Mode::Boolean, kWordBits);
  if (which == 0) {
    auto t = gates::eq(p, std::move(x), std::move(y));
    co_return co_await std::move(t);
  }
  if (which == 1) {
    auto t = gates::lt(p, std::move(x), std::move(y));
    co_return co_await std::move(t);
  }
  auto t = gates::rca(p, std::move(x), std::move(y));
  co_return co_await std::move(t);
}

// Comparison and addition circuits at 64 bits over n elements.
void BM_Gate(benchmark::State& state, int which) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Counters c;
  for (auto _ : state) {
    auto res = run_parties(RunOptions{}, [which, n](Party& p) { return p.run(gate(p, which, n)); });
    c = res.counters[0];
  }
  report(state, c);
}
BENCHMARK_CAPTURE(BM_Gate, eq, 0)->Arg(1024)->Arg(16384)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Gate, lt, 1)->Arg(1024)->Arg(16384)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Gate, rca, 2)->Arg(1024)->Arg(16384)->Unit(benchmark::kMillisecond);

Task<SharedTable> sort_random(Party& p, std::size_t n) {
  SharedTable t;
  t.rows = n;
  t.add("k", gates::random(p, n, Mode::Boolean, kWordBits));
  t.add("v", gates::random(p, n, Mode::Boolean, kWordBits));
  auto s = ops::sort(p, std::move(t), ops::SortSpec{{{"k", false}}});
  co_return co_await std::move(s);
}

void BM_Sort(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Counters c;
  for (auto _ : state) {
    auto res = run_parties(RunOptions{}, [n](Party& p) { return p.run(sort_random(p, n)).rows; });
    c = res.counters[0];
  }
  report(state, c);
}
BENCHMARK(BM_Sort)->RangeMultiplier(4)->Range(16, 1024)->Unit(benchmark::kMillisecond);

// End-to-end benchmark queries, shares dealt once outside the timed loop.
void BM_Query(benchmark::State& state, const BenchQuery* bq, bool optimize) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const PlainDb db = bq->data(n, 1);
  const Catalog cat = catalog_of(db);
  EngineOptions eo;
  eo.optimize = optimize;
  const Prepared prepared = prepare(bq->sql, cat, eo);
  const auto shares = share_database(db, share_manifest(cat, {prepared.plan}), 1);
  Counters c;
  for (auto _ : state) {
    const Outcome o = execute_query(prepared, shares, eo);
    c = o.counters;
    benchmark::DoNotOptimize(o.rows.data());
  }
  report(state, c);
}

void BM_Plan(benchmark::State& state, const BenchQuery* bq) {
  const PlainDb db = bq->data(64, 1);
  const Catalog cat = catalog_of(db);
  const EngineOptions eo;
  for (auto _ : state) benchmark::DoNotOptimize(prepare(bq->sql, cat, eo).plan.get());
}

}  // namespace

int main(int argc, char** argv) {
  for (const auto& bq : benchmark_queries()) {
    for (bool optimize : {false, true})
      benchmark::RegisterBenchmark(("BM_Query/" + bq.name + (optimize ? "/optimized" : "/baseline")).c_str(),
                                   BM_Query, &bq, optimize)
          ->Arg(16)
          ->Arg(64)
          ->Unit(benchmark::kMillisecond);
    benchmark::RegisterBenchmark(("BM_Plan/" + bq.name).c_str(), BM_Plan, &bq)->Unit(benchmark::kMicrosecond);
  }
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
