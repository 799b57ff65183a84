#pragma once

#include <random>

#include "secrecy/cost.hpp"
#include "secrecy/data.hpp"
#include "secrecy/executor.hpp"
#include "secrecy/oracle.hpp"

namespace secrecy::test {

using Row = std::vector<std::int64_t>;

struct PlanRun {
  oracle::Rows live;  // opened live rows, in physical order
  std::vector<NodeRun> nodes;
  Counters total;
  std::array<CommTrace, kParties> traces;
  std::optional<OpenedTable> opened;
};

namespace detail {

inline Task<std::vector<Word>> open_vec(Party& p, SVec v) {
  auto t = gates::open(p, std::move(v));
  co_return co_await std::move(t);
}

inline Task<PlanRun> run_and_open(Party& p, PlanPtr plan, const Database* db, ExecOptions opt) {
  auto te = execute(p, plan, db, opt);
  ExecResult r = co_await std::move(te);
  PlanRun out;
  out.nodes = r.nodes;
  out.total = p.counters();
  out.traces[0] = p.trace();
  out.opened = r.opened;
  if (r.opened) co_return out;
  const SharedTable& t = r.table;
  std::vector<std::vector<Word>> cols;
  for (const auto& c : t.cols) {
    auto to = open_vec(p, c);
    cols.push_back(co_await std::move(to));
  }
  std::vector<Word> f(t.rows, 1), d(t.rows, 1);
  if (t.f) {
    auto to = open_vec(p, *t.f);
    f = co_await std::move(to);
  }
  if (t.d) {
    auto to = open_vec(p, *t.d);
    d = co_await std::move(to);
  }
  out.live.names = t.names;
  for (std::size_t r2 = 0; r2 < t.rows; ++r2) {
    if ((f[r2] & d[r2] & 1) == 0) continue;
    Row row;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      Word v = cols[c][r2];
      if (t.cols[c].mode == Mode::Boolean && p.width() < 64) {
        const Word m = (Word{1} << p.width()) - 1;
        v &= m;
        if (v >> (p.width() - 1)) v |= ~m;
      }
      row.push_back(static_cast<std::int64_t>(v));
    }
    out.live.rows.push_back(std::move(row));
  }
  co_return out;
}

}  // namespace detail

/// Shares db, runs plan on three in-process parties and opens every output
/// column with its flags (after measurement).
inline PlanRun run_plan(const PlainDb& db, PlanPtr plan, std::size_t batch_rows = 4096, std::uint64_t seed = 7,
                        RunOptions opt = {}) {
  auto shares = share_database(db, manifest_of(*plan), seed, opt.width);
  opt.seed = seed;
  auto res = run_parties(opt, [&](Party& p) {
    return p.run(detail::run_and_open(p, plan, &shares[p.id()], ExecOptions{batch_rows}));
  });
  PlanRun out = res.values[0];
  out.traces = res.traces;
  return out;
}

inline PlainTable random_table(std::vector<std::string> cols, std::size_t rows, std::int64_t lo, std::int64_t hi,
                               std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_int_distribution<std::int64_t> u(lo, hi);
  PlainTable t;
  t.columns = std::move(cols);
  for (std::size_t r = 0; r < rows; ++r) {
    Row row;
    for (std::size_t c = 0; c < t.columns.size(); ++c) row.push_back(u(g));
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace secrecy::test
