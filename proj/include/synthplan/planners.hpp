#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "synthplan/onestep.hpp"
#include "synthplan/route.hpp"

namespace synthplan {

struct SearchLimits {
  int beam_width = 10;
  int max_depth = 6;
  int expansions_budget = 2000;
  int proposals_per_node = 10;

  void validate() const {
    if (beam_width < 1 || max_depth < 1 || expansions_budget < 0 ||
        proposals_per_node < 1)
      throw std::invalid_argument("SearchLimits fields must be positive");
  }
};

// Memoizing front-end over a frozen one-step model: proposal lists, step log
// probabilities and atom counts keyed by canonical product string.
class Proposer {
 public:
  Proposer(const OneStepModel& model, const std::vector<ReactionRule>& rules)
      : model_(model), rules_(rules) {
    if (model.rule_ids.size() != rules.size())
      throw std::invalid_argument("model/rule file size mismatch");
    for (std::size_t i = 0; i < rules.size(); ++i)
      if (model.rule_ids[i] != rules[i].id)
        throw std::invalid_argument("model rule order differs from rule file");
  }

  const OneStepModel& model() const { return model_; }
  const std::vector<ReactionRule>& rules() const { return rules_; }

  const std::vector<Proposal>& all(const std::string& canon) {
    auto it = proposals_.find(canon);
    if (it != proposals_.end()) return it->second;
    std::vector<Proposal> out = propose_all(model_, rules_, graph(canon));
    return proposals_.emplace(canon, std::move(out)).first->second;
  }

  // Proposals merged by reactant set: mass from rules producing the same set
  // aggregates and the surviving rule id is the largest single contributor
  // (smallest id on ties). Search transitions branch over these, which keeps
  // accumulated scores equal to step_logp sums.
  const std::vector<Proposal>& distinct(const std::string& canon) {
    auto it = distinct_.find(canon);
    if (it != distinct_.end()) return it->second;
    std::map<std::string, Proposal> merged;  // set key -> aggregate
    std::map<std::string, double> best_share;
    for (const Proposal& p : all(canon)) {
      std::string key;
      for (const std::string& m : p.reactants) {
        key += m;
        key += ',';
      }
      auto slot = merged.find(key);
      if (slot == merged.end()) {
        merged[key] = p;
        best_share[key] = p.probability;
      } else {
        slot->second.probability += p.probability;
        if (p.probability > best_share[key]) {
          best_share[key] = p.probability;
          slot->second.rule_id = p.rule_id;
        }
      }
    }
    std::vector<Proposal> out;
    for (auto& [key, p] : merged) out.push_back(std::move(p));
    std::sort(out.begin(), out.end(), [](const Proposal& x, const Proposal& y) {
      if (x.probability != y.probability) return x.probability > y.probability;
      std::string kx = synthplan::detail::reactant_set_key(x.reactants);
      std::string ky = synthplan::detail::reactant_set_key(y.reactants);
      if (kx != ky) return kx < ky;
      return x.rule_id < y.rule_id;
    });
    return distinct_.emplace(canon, std::move(out)).first->second;
  }

  // Distinct proposals whose recorded rule forward-reconstructs the product
  // exactly. Search only follows these, so emitted routes always
  // forward-validate; the dropped mass stays in the model's distribution.
  const std::vector<Proposal>& valid(const std::string& canon) {
    auto it = valid_.find(canon);
    if (it != valid_.end()) return it->second;
    std::unordered_map<std::string, std::size_t> rule_index;
    for (std::size_t i = 0; i < rules_.size(); ++i)
      rule_index[rules_[i].id] = i;
    std::vector<Proposal> out;
    for (const Proposal& p : distinct(canon)) {
      const ReactionRule& rule = rules_[rule_index.at(p.rule_id)];
      auto rebuilt = apply_forward_rule(
          rule, {parse_smiles(p.reactants[0]), parse_smiles(p.reactants[1])});
      if (rebuilt && canonical_smiles(*rebuilt) == canon) out.push_back(p);
    }
    return valid_.emplace(canon, std::move(out)).first->second;
  }

  std::vector<Proposal> topk(const std::string& canon, int k) {
    const std::vector<Proposal>& full = valid(canon);
    if (static_cast<int>(full.size()) <= k) return full;
    return {full.begin(), full.begin() + k};
  }

  double step_logp(const std::string& canon, const ReactantSet& reactants) {
    ReactantSet sorted = reactants;
    std::sort(sorted.begin(), sorted.end());
    double total = 0.0;
    for (const Proposal& p : all(canon))
      if (p.reactants == sorted) total += p.probability;
    if (total <= 0.0) return -std::numeric_limits<double>::infinity();
    return std::log(total);
  }

  int atom_count(const std::string& canon) {
    auto it = atoms_.find(canon);
    if (it != atoms_.end()) return it->second;
    int n = graph(canon).atom_count();
    atoms_[canon] = n;
    return n;
  }

 private:
  const MolGraph& graph(const std::string& canon) {
    auto it = graphs_.find(canon);
    if (it != graphs_.end()) return it->second;
    return graphs_.emplace(canon, parse_smiles(canon)).first->second;
  }

  const OneStepModel& model_;
  const std::vector<ReactionRule>& rules_;
  std::unordered_map<std::string, std::vector<Proposal>> proposals_;
  std::unordered_map<std::string, std::vector<Proposal>> distinct_;
  std::unordered_map<std::string, std::vector<Proposal>> valid_;
  std::unordered_map<std::string, MolGraph> graphs_;
  std::unordered_map<std::string, int> atoms_;
};

namespace detail {

struct OpenMol {
  std::string mol;
  int depth = 0;
  std::set<std::string> ancestors;
};

struct Partial {
  std::map<std::string, RouteStep> steps;  // product -> step
  std::vector<OpenMol> open;
  double logp = 0.0;

  bool complete() const { return open.empty(); }
};

// Deterministic identity for tie-breaking between partial routes.
inline std::string partial_key(const Partial& p) {
  std::string key;
  for (const auto& [product, step] : p.steps) {
    key += product;
    key += '<';
    key += step.rule_id;
    for (const std::string& r : step.reactants) {
      key += ',';
      key += r;
    }
    key += ';';
  }
  key += '|';
  std::vector<std::string> open_keys;
  for (const OpenMol& o : p.open)
    open_keys.push_back(o.mol + "@" + std::to_string(o.depth));
  std::sort(open_keys.begin(), open_keys.end());
  for (const std::string& k : open_keys) {
    key += k;
    key += ';';
  }
  return key;
}

// Expansion order: largest open molecule first, smallest canonical string on
// ties.
inline std::size_t select_open(Proposer& proposer, const Partial& p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.open.size(); ++i) {
    int na = proposer.atom_count(p.open[i].mol);
    int nb = proposer.atom_count(p.open[best].mol);
    if (na > nb || (na == nb && p.open[i].mol < p.open[best].mol)) best = i;
  }
  return best;
}

inline Route to_route(const std::string& target, const Partial& p) {
  Route r;
  r.target = target;
  r.log_prob = p.logp;
  for (const auto& [product, step] : p.steps) r.steps.push_back(step);
  return normalize_route(r);
}

// Two routes that cut the same bonds with the same rules in a different
// order reach the same starting materials; only one of them is worth
// returning. Completed routes are therefore keyed by their material set and
// the best-scoring representative wins.
inline std::string leaf_key(const Route& r) {
  std::string key;
  for (const std::string& leaf : r.leaves()) {
    key += leaf;
    key += ';';
  }
  return key;
}

// Expands the selected open molecule of `partial`. Children that closed
// every leaf go to `completed` (deduplicated by material set); the rest are
// appended to `out`.
inline void expand_partial(Proposer& proposer,
                           const std::set<std::string>& inventory,
                           const SearchLimits& limits, const std::string& target,
                           const Partial& partial,
                           std::vector<Partial>& out,
                           std::map<std::string, Route>& completed) {
  Partial base = partial;
  std::size_t sel = select_open(proposer, base);
  OpenMol entry = base.open[sel];
  base.open.erase(base.open.begin() + sel);

  auto finish_or_push = [&](Partial&& child) {
    if (child.complete()) {
      Route r = to_route(target, child);
      auto it = completed.find(leaf_key(r));
      if (it == completed.end())
        completed.emplace(leaf_key(r), std::move(r));
      else if (r.log_prob > it->second.log_prob ||
               (r.log_prob == it->second.log_prob &&
                route_struct_key(r) < route_struct_key(it->second)))
        it->second = std::move(r);
    } else {
      out.push_back(std::move(child));
    }
  };

  if (base.steps.count(entry.mol)) {
    // The molecule was already decomposed on another branch; the subtree is
    // shared and this leaf simply closes.
    finish_or_push(std::move(base));
    return;
  }
  if (entry.depth >= limits.max_depth) return;  // dead end

  std::set<std::string> path = entry.ancestors;
  path.insert(entry.mol);
  for (const Proposal& prop :
       proposer.topk(entry.mol, limits.proposals_per_node)) {
    bool cyclic = false;
    for (const std::string& r : prop.reactants)
      if (path.count(r)) cyclic = true;
    if (cyclic) continue;
    Partial child = base;
    child.steps[entry.mol] = RouteStep{entry.mol, prop.reactants, prop.rule_id,
                                       std::log(prop.probability)};
    child.logp += std::log(prop.probability);
    std::set<std::string> opened;
    for (const std::string& r : prop.reactants) {
      if (inventory.count(r) || child.steps.count(r) || opened.count(r))
        continue;
      opened.insert(r);
      child.open.push_back(OpenMol{r, entry.depth + 1, path});
    }
    finish_or_push(std::move(child));
  }
}

inline std::vector<Route> sorted_routes(std::map<std::string, Route>&& completed,
                                        int cap) {
  std::vector<std::pair<std::string, Route>> items;
  for (auto& [key, route] : completed) items.emplace_back(key, std::move(route));
  std::sort(items.begin(), items.end(), [](const auto& x, const auto& y) {
    if (x.second.log_prob != y.second.log_prob)
      return x.second.log_prob > y.second.log_prob;
    return x.first < y.first;
  });
  std::vector<Route> out;
  for (auto& [key, route] : items) {
    out.push_back(std::move(route));
    if (static_cast<int>(out.size()) >= cap) break;
  }
  return out;
}

}  // namespace detail

// Beam search over partial routes scored by accumulated log probability.
// Returns at most beam_width complete routes sorted by log_prob descending.
inline std::vector<Route> beam_search_plan(const std::string& target,
                                           Proposer& proposer,
                                           const std::set<std::string>& inventory,
                                           const SearchLimits& limits) {
  limits.validate();
  if (inventory.count(target))
    throw std::invalid_argument("target is already a starting material");
  std::vector<detail::Partial> frontier;
  frontier.push_back(detail::Partial{
      {}, {detail::OpenMol{target, 0, {}}}, 0.0});
  std::map<std::string, Route> completed;
  while (!frontier.empty()) {
    std::vector<detail::Partial> children;
    for (const detail::Partial& p : frontier)
      detail::expand_partial(proposer, inventory, limits, target, p, children,
                             completed);
    std::sort(children.begin(), children.end(),
              [](const detail::Partial& x, const detail::Partial& y) {
                if (x.logp != y.logp) return x.logp > y.logp;
                return detail::partial_key(x) < detail::partial_key(y);
              });
    if (static_cast<int>(children.size()) > limits.beam_width)
      children.resize(limits.beam_width);
    frontier = std::move(children);
  }
  return detail::sorted_routes(std::move(completed), limits.beam_width);
}

// Best-first search over partial routes with priority
// (cost so far) + sum of value_fn over open molecules, where cost is the
// negative accumulated log probability. value_fn is pluggable (zero or a
// network-derived oracle).
inline std::vector<Route> retrostar_plan(
    const std::string& target, Proposer& proposer,
    const std::set<std::string>& inventory,
    const std::function<double(const std::string&)>& value_fn,
    const SearchLimits& limits) {
  limits.validate();
  if (inventory.count(target))
    throw std::invalid_argument("target is already a starting material");
  auto priority = [&](const detail::Partial& p) {
    double v = -p.logp;
    for (const detail::OpenMol& o : p.open) v += value_fn(o.mol);
    return v;
  };
  using Entry = std::pair<std::pair<double, std::string>, detail::Partial>;
  auto cmp = [](const Entry& x, const Entry& y) { return x.first > y.first; };
  std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> queue(cmp);
  detail::Partial init{{}, {detail::OpenMol{target, 0, {}}}, 0.0};
  queue.push(Entry{{priority(init), detail::partial_key(init)}, init});
  std::map<std::string, Route> completed;
  int expansions = 0;
  while (!queue.empty() && expansions < limits.expansions_budget &&
         static_cast<int>(completed.size()) < limits.beam_width) {
    detail::Partial current = queue.top().second;
    queue.pop();
    ++expansions;
    std::vector<detail::Partial> children;
    detail::expand_partial(proposer, inventory, limits, target, current,
                           children, completed);
    for (detail::Partial& child : children) {
      std::pair<double, std::string> key{priority(child),
                                         detail::partial_key(child)};
      queue.push(Entry{std::move(key), std::move(child)});
    }
  }
  return detail::sorted_routes(std::move(completed), limits.beam_width);
}

// Depth-first planning that always tries the most probable proposal first
// and backtracks on dead ends. Returns the first complete route found.
inline std::optional<Route> greedy_dfs_plan(
    const std::string& target, Proposer& proposer,
    const std::set<std::string>& inventory, const SearchLimits& limits) {
  limits.validate();
  if (inventory.count(target))
    throw std::invalid_argument("target is already a starting material");
  std::map<std::string, RouteStep> steps;
  double logp = 0.0;
  std::function<bool(const std::string&, int, std::set<std::string>)> solve =
      [&](const std::string& mol, int depth,
          std::set<std::string> path) -> bool {
    if (inventory.count(mol)) return true;
    if (steps.count(mol)) return true;
    if (depth >= limits.max_depth) return false;
    path.insert(mol);
    for (const Proposal& prop :
         proposer.topk(mol, limits.proposals_per_node)) {
      bool cyclic = false;
      for (const std::string& r : prop.reactants)
        if (path.count(r)) cyclic = true;
      if (cyclic) continue;
      auto steps_snapshot = steps;
      double logp_snapshot = logp;
      steps[mol] =
          RouteStep{mol, prop.reactants, prop.rule_id, std::log(prop.probability)};
      logp += std::log(prop.probability);
      bool ok = true;
      for (const std::string& r : prop.reactants) {
        if (!solve(r, depth + 1, path)) {
          ok = false;
          break;
        }
      }
      if (ok) return true;
      steps = std::move(steps_snapshot);
      logp = logp_snapshot;
    }
    return false;
  };
  if (!solve(target, 0, {})) return std::nullopt;
  Route r;
  r.target = target;
  r.log_prob = logp;
  for (const auto& [product, step] : steps) r.steps.push_back(step);
  return normalize_route(r);
}

// Recomputed whole-route log probability; matches the accumulated value for
// any route whose steps the model can actually produce.
inline double route_log_prob(const Route& route, Proposer& proposer) {
  double total = 0.0;
  for (const RouteStep& s : route.steps)
    total += proposer.step_logp(s.product, s.reactants);
  return total;
}

// Minimal achievable route cost (negative log probability) per network
// molecule under the given model, derived from the recorded reactions by
// value iteration. Molecules outside the network fall back to 0.
inline std::function<double(const std::string&)> oracle_value_fn(
    const Benchmark& bench, Proposer& proposer) {
  auto costs = std::make_shared<std::unordered_map<std::string, double>>();
  for (const std::string& m : bench.inventory) (*costs)[m] = 0.0;
  std::vector<double> step_costs(bench.reactions.size());
  for (std::size_t i = 0; i < bench.reactions.size(); ++i) {
    const ReactionRecord& rec = bench.reactions[i];
    step_costs[i] = -proposer.step_logp(rec.product, rec.reactants);
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < bench.reactions.size(); ++i) {
      const ReactionRecord& rec = bench.reactions[i];
      if (!std::isfinite(step_costs[i])) continue;
      double total = step_costs[i];
      bool known = true;
      for (const std::string& r : rec.reactants) {
        auto it = costs->find(r);
        if (it == costs->end()) {
          known = false;
          break;
        }
        total += it->second;
      }
      if (!known) continue;
      auto it = costs->find(rec.product);
      if (it == costs->end() || total < it->second - 1e-12) {
        (*costs)[rec.product] = total;
        changed = true;
      }
    }
  }
  return [costs](const std::string& mol) {
    auto it = costs->find(mol);
    return it == costs->end() ? 0.0 : it->second;
  };
}

}  // namespace synthplan
