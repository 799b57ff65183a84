#include "secrecy/executor.hpp"

#include "secrecy/error.hpp"
#include "secrecy/operators.hpp"

namespace secrecy {

SharedTable scan_table(const Party& p, const PlanNode& scan, const Database& db) {
  auto it = db.find(scan.table);
  if (it == db.end()) throw Error(Errc::UnknownTable, scan.table);
  const StoredTable& st = it->second;
  SharedTable t;
  t.rows = st.padded_rows;
  for (const auto& c : scan.cols) {
    std::size_t i = 0;
    while (i < st.names.size() && st.names[i] != c) ++i;
    if (i == st.names.size()) throw Error(Errc::UnknownColumn, scan.table + "." + c);
    t.add(scan.alias + "." + c, st.cols[i]);
  }
  if (st.live_rows < st.padded_rows) {
    std::vector<Word> valid(st.padded_rows, 0);
    for (std::size_t r = 0; r < st.live_rows; ++r) valid[r] = 1;
    t.f = gates::constant(p, valid, Mode::Boolean, 1);
  }
  return t;
}

namespace {

ops::JoinSpec join_spec(const PlanNode& n, const ExecOptions& opt) {
  ops::JoinSpec s;
  s.theta = n.pred;
  s.left_pred = n.left_pred;
  s.right_pred = n.right_pred;
  s.partial = n.partial;
  s.batch_rows = opt.batch_rows;
  return s;
}

Task<SharedTable> run_node(Party& p, PlanPtr plan, const Database* db, ExecOptions opt, std::vector<NodeRun>* log,
                           int depth) {
  const PlanNode& n = *plan;
  if (n.op == OpKind::Open) throw Error(Errc::UnsupportedFeature, "Open below the plan root");
  std::vector<SharedTable> in;
  for (const auto& k : n.kids) {
    auto t = run_node(p, k, db, opt, log, depth + 1);
    in.push_back(co_await std::move(t));
  }
  const Counters before = p.counters();
  SharedTable out;
  switch (n.op) {
    case OpKind::Scan:
      out = scan_table(p, n, *db);
      break;
    case OpKind::Select: {
      auto t = ops::select(p, std::move(in[0]), n.pred);
      out = co_await std::move(t);
      break;
    }
    case OpKind::Project:
      out = ops::project(std::move(in[0]), n.cols);
      break;
    case OpKind::Join: {
      auto t = ops::join(p, std::move(in[0]), std::move(in[1]), join_spec(n, opt));
      out = co_await std::move(t);
      break;
    }
    case OpKind::SemiJoin: {
      auto t = ops::semijoin(p, std::move(in[0]), std::move(in[1]), join_spec(n, opt));
      out = co_await std::move(t);
      break;
    }
    case OpKind::Sort: {
      auto t = ops::sort(p, std::move(in[0]), ops::SortSpec{n.sort_keys, n.flag_unit, n.mask_keys, n.limit});
      out = co_await std::move(t);
      break;
    }
    case OpKind::GroupBy: {
      auto t = ops::groupby(p, std::move(in[0]), n.keys, n.aggs, n.presorted, n.dual);
      out = co_await std::move(t);
      break;
    }
    case OpKind::Distinct: {
      auto t = ops::distinct(p, std::move(in[0]), n.keys, n.mode);
      out = co_await std::move(t);
      break;
    }
    case OpKind::Adjacent: {
      auto t = ops::adjacent(p, std::move(in[0]), n.pred);
      out = co_await std::move(t);
      break;
    }
    case OpKind::GlobalAgg: {
      auto t = ops::global_agg(p, std::move(in[0]), n.aggs, n.dual);
      out = co_await std::move(t);
      break;
    }
    case OpKind::Shuffle: {
      auto t = ops::shuffle(p, std::move(in[0]));
      out = co_await std::move(t);
      break;
    }
    case OpKind::Open:
      break;
  }
  log->push_back({plan.get(), depth, p.counters() - before});
  co_return out;
}

}  // namespace

Task<ExecResult> execute(Party& p, PlanPtr plan, const Database* db, ExecOptions opt) {
  ExecResult r;
  if (plan->op == OpKind::Open) {
    auto t = run_node(p, plan->kids.at(0), db, opt, &r.nodes, 1);
    r.table = co_await std::move(t);
    const Counters before = p.counters();
    auto o = ops::open(p, r.table, plan->cols);
    r.opened = co_await std::move(o);
    r.nodes.push_back({plan.get(), 0, p.counters() - before});
  } else {
    auto t = run_node(p, plan, db, opt, &r.nodes, 0);
    r.table = co_await std::move(t);
  }
  co_return r;
}

}  // namespace secrecy
