#include "secrecy/planner.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <json.hpp>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "secrecy/error.hpp"

namespace secrecy {

namespace {

constexpr std::size_t kMaxCombos = 64;
constexpr std::size_t kMaxClosure = 200;
constexpr std::size_t kMaxShapes = 8;

struct Cand {
  PlanPtr plan;
  PlanCost cost;
  Shape shape;
  std::set<std::string> rules;
};

bool cand_better(const Cand& a, const Cand& b) { return better(a.cost, *a.plan, b.cost, *b.plan); }

void subtree_hashes(const PlanNode& p, std::unordered_set<std::size_t>& out) {
  out.insert(hash_plan(p));
  for (const auto& k : p.kids) subtree_hashes(*k, out);
}

class Search {
 public:
  Search(const Catalog& cat, const PlannerOptions& opt) : cat_(cat), opt_(opt) {}

  // Best candidate per output shape; the first entry has the shape of p itself.
  const std::vector<Cand>& best(const PlanPtr& p) {
    const std::size_t h = hash_plan(*p);
    if (auto it = memo_.find(h); it != memo_.end()) return it->second;
    active_.insert(h);
    std::vector<Cand> found;

    std::vector<const std::vector<Cand>*> kids;
    for (const auto& k : p->kids) kids.push_back(&best(k));
    std::vector<std::size_t> pick(kids.size(), 0);
    for (std::size_t combo = 0; combo < kMaxCombos; ++combo) {
      std::vector<PlanPtr> ks;
      std::set<std::string> used;
      for (std::size_t i = 0; i < kids.size(); ++i) {
        const Cand& c = (*kids[i])[pick[i]];
        ks.push_back(c.plan);
        used.insert(c.rules.begin(), c.rules.end());
      }
      closure(p->kids.empty() ? p : with_kids(*p, ks), used, found);
      // Next combination, odometer order.
      std::size_t i = 0;
      while (i < kids.size() && ++pick[i] == kids[i]->size()) pick[i++] = 0;
      if (i == kids.size()) break;
    }

    const Shape own = infer_shape(*p, cat_);
    std::vector<Cand> groups;
    for (auto& c : found) {
      auto g = std::find_if(groups.begin(), groups.end(), [&](const Cand& x) { return x.shape == c.shape; });
      if (g == groups.end())
        groups.push_back(std::move(c));
      else if (cand_better(c, *g))
        *g = std::move(c);
    }
    std::sort(groups.begin(), groups.end(), [&](const Cand& a, const Cand& b) {
      const bool ao = a.shape == own, bo = b.shape == own;
      if (ao != bo) return ao;
      return cand_better(a, b);
    });
    if (groups.size() > kMaxShapes) groups.resize(kMaxShapes);
    active_.erase(h);
    return memo_[h] = std::move(groups);
  }

 private:
  void closure(const PlanPtr& root, const std::set<std::string>& used, std::vector<Cand>& found) {
    std::vector<std::pair<PlanPtr, std::set<std::string>>> queue{{root, used}};
    std::unordered_set<std::size_t> seen{hash_plan(*root)};
    for (std::size_t at = 0; at < queue.size() && at < kMaxClosure; ++at) {
      const PlanPtr plan = queue[at].first;
      const std::set<std::string> rules = queue[at].second;
      Cand c;
      try {
        c.cost = cost_plan(*plan, cat_, opt_.cost);
        c.shape = infer_shape(*plan, cat_);
      } catch (const Error&) {
        continue;  // a rewrite that does not type-check or has no cost rule
      }
      c.plan = plan;
      c.rules = rules;
      found.push_back(std::move(c));

      std::unordered_set<std::size_t> known;
      subtree_hashes(*plan, known);
      for (const auto& rule : rules::all()) {
        std::vector<PlanPtr> alts;
        try {
          alts = rule.apply(plan, cat_);
        } catch (const Error&) {
          continue;
        }
        for (PlanPtr alt : alts) {
          alt = settle_kids(alt, known);
          if (!seen.insert(hash_plan(*alt)).second) continue;
          auto r = rules;
          r.insert(rule.name);
          queue.emplace_back(alt, std::move(r));
        }
      }
    }
  }

  // Subtrees a rule created are optimized on their own.
  PlanPtr settle_kids(const PlanPtr& alt, const std::unordered_set<std::size_t>& known) {
    std::vector<PlanPtr> kids = alt->kids;
    bool changed = false;
    for (auto& k : kids) {
      const std::size_t h = hash_plan(*k);
      if (known.count(h) || active_.count(h)) continue;
      try {
        const auto& cands = best(k);
        if (cands.empty()) continue;
        const Cand* pick = &cands.front();
        for (const auto& c : cands)
          if (cand_better(c, *pick)) pick = &c;
        k = pick->plan;
        changed = true;
      } catch (const Error&) {
      }
    }
    return changed ? with_kids(*alt, std::move(kids)) : alt;
  }

  const Catalog& cat_;
  const PlannerOptions& opt_;
  std::unordered_map<std::size_t, std::vector<Cand>> memo_;
  std::unordered_set<std::size_t> active_;
};

}  // namespace

bool better(const PlanCost& a, const PlanNode& pa, const PlanCost& b, const PlanNode& pb) {
  const double scale = std::max(std::abs(a.scalar), std::abs(b.scalar));
  if (std::abs(a.scalar - b.scalar) > 1e-12 * scale) return a.scalar < b.scalar;
  if (a.total.rounds != b.total.rounds) return a.total.rounds < b.total.rounds;
  if (pa.size() != pb.size()) return pa.size() < pb.size();
  return plan_to_text(pa) < plan_to_text(pb);
}

Optimized optimize(const PlanPtr& plan, const Catalog& cat, const PlannerOptions& opt) {
  Optimized out;
  if (plan->size() > opt.node_cap) {
    out.plan = plan;
    out.cost = cost_plan(*plan, cat, opt.cost);
    out.capped = true;
    return out;
  }
  Search search(cat, opt);
  const auto& cands = search.best(plan);
  // Only the output columns are observable, plus the row order below an
  // ordering root. The first candidate has the original shape.
  const Shape own = infer_shape(*plan, cat);
  std::vector<std::string> names;
  for (const auto& c : own.cols) names.push_back(c.name);
  const Cand* pick = &cands.front();
  for (const auto& c : cands) {
    if (!std::all_of(names.begin(), names.end(), [&](const std::string& n) { return c.shape.has(n); })) continue;
    if (!own.sorted_by.empty() && c.shape.sorted_by != own.sorted_by) continue;
    if (cand_better(c, *pick)) pick = &c;
  }
  out.plan = pick->plan;
  std::vector<std::string> got;
  for (const auto& c : pick->shape.cols) got.push_back(c.name);
  if (got != names) out.plan = make_project(out.plan, names);
  out.rules = pick->rules;
  out.cost = cost_plan(*out.plan, cat, opt.cost);
  return out;
}

std::string explain_table(const PlanCost& cost) {
  std::ostringstream os;
  os << std::left << std::setw(48) << "node" << std::right << std::setw(14) << "ops" << std::setw(8) << "rounds"
     << std::setw(12) << "comp.rounds" << std::setw(16) << "cum.ops" << std::setw(12) << "cum.rounds" << '\n';
  for (const auto& n : cost.nodes) {
    std::string label = std::string(static_cast<std::size_t>(n.depth) * 2, ' ') + describe(*n.node);
    if (label.size() > 47) label = label.substr(0, 44) + "...";
    os << std::left << std::setw(48) << label << std::right << std::setw(14) << n.cost.ops << std::setw(8)
       << n.cost.rounds << std::setw(12) << n.composition_rounds << std::setw(16) << n.cumulative.ops
       << std::setw(12) << n.cumulative.rounds << '\n';
  }
  os << std::left << std::setw(48) << "total" << std::right << std::setw(14) << cost.total.ops << std::setw(8)
     << cost.total.rounds << '\n';
  return os.str();
}

std::string explain_json(const PlanNode& plan, const PlanCost& cost, const std::set<std::string>& rules,
                         int indent) {
  nlohmann::json j;
  j["plan"] = nlohmann::json::parse(plan_to_json(plan, -1));
  j["total"] = {{"ops", cost.total.ops}, {"rounds", cost.total.rounds}, {"scalar", cost.scalar}};
  j["rules"] = rules;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& n : cost.nodes)
    rows.push_back({{"node", describe(*n.node)},
                    {"depth", n.depth},
                    {"ops", n.cost.ops},
                    {"rounds", n.cost.rounds},
                    {"composition_rounds", n.composition_rounds},
                    {"cumulative", {{"ops", n.cumulative.ops}, {"rounds", n.cumulative.rounds}}}});
  j["nodes"] = rows;
  return j.dump(indent);
}

}  // namespace secrecy
