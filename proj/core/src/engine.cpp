#include "secrecy/engine.hpp"

#include <algorithm>
#include <chrono>

namespace secrecy {

Prepared prepare(const std::string& sql_text, const Catalog& cat, const EngineOptions& opt) {
  Prepared p;
  p.lowered = lower(sql::parse(sql_text, opt.strict), cat, opt.strict);
  if (opt.optimize) {
    Optimized o = optimize(p.lowered.plan, cat, opt.planner);
    p.plan = o.plan;
    p.cost = o.cost;
    p.rules = o.rules;
    p.capped = o.capped;
  } else {
    p.plan = p.lowered.plan;
    p.cost = cost_plan(*p.plan, cat, opt.planner.cost);
  }
  return p;
}

namespace {

Task<ExecResult> run_plan(Party& p, PlanPtr plan, const Database* db, ExecOptions eo) {
  auto t = execute(p, std::move(plan), db, eo);
  co_return co_await std::move(t);
}

}  // namespace

Outcome execute_query(const Prepared& q, const std::array<Database, kParties>& shares, const EngineOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  const ExecOptions eo{opt.planner.cost.batch_rows};
  auto res = run_parties(opt.run, [&](Party& p) { return p.run(run_plan(p, q.plan, &shares[static_cast<std::size_t>(p.id())], eo)); });
  Outcome out;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const ExecResult& r = res.values[0];
  out.nodes = r.nodes;
  out.counters = res.counters[0];
  out.traces = res.traces;
  const unsigned w = opt.run.width;
  std::vector<std::vector<std::int64_t>> rows;
  for (const auto& row : r.opened->rows) {
    std::vector<std::int64_t> v;
    for (Word x : row) {
      if (w < 64 && (x >> (w - 1)) & 1) x |= ~((Word{1} << w) - 1);  // sign-extend
      v.push_back(static_cast<std::int64_t>(x));
    }
    rows.push_back(std::move(v));
  }
  for (const auto& c : q.lowered.columns) out.names.push_back(c.name);
  out.rows = result_rows(q.lowered, r.opened->names, rows);
  return out;
}

Manifest share_manifest(const Catalog& cat, const std::vector<PlanPtr>& plans) {
  Manifest m;
  for (const auto& [name, t] : cat.tables) m[name] = t.columns;
  for (const auto& p : plans)
    for (const auto& [table, cols] : manifest_of(*p))
      for (const auto& c : cols)
        if (std::find(m[table].begin(), m[table].end(), c) == m[table].end()) m[table].push_back(c);
  return m;
}

}  // namespace secrecy
