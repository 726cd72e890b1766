#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthplan/reaction.hpp"

namespace synthplan {

struct RouteStep {
  std::string product;
  ReactantSet reactants;  // sorted canonical strings
  std::string rule_id;
  double logp = 0.0;
};

// A synthetic route: a tree of reactions rooted at the target. Every
// non-leaf molecule is the product of exactly one step; leaves are the
// starting materials. log_prob accumulates the step log probabilities.
struct Route {
  std::string target;
  double log_prob = 0.0;
  std::vector<RouteStep> steps;  // deterministic pre-order

  std::map<std::string, const RouteStep*> step_index() const {
    std::map<std::string, const RouteStep*> idx;
    for (const RouteStep& s : steps) idx[s.product] = &s;
    return idx;
  }

  // Starting material set B: molecules that are never a step product.
  std::set<std::string> leaves() const {
    auto idx = step_index();
    std::set<std::string> out;
    for (const RouteStep& s : steps)
      for (const std::string& r : s.reactants)
        if (!idx.count(r)) out.insert(r);
    return out;
  }

  std::set<std::string> intermediates() const {
    auto idx = step_index();
    std::set<std::string> out;
    for (const RouteStep& s : steps)
      if (s.product != target) out.insert(s.product);
    return out;
  }

  // Longest chain of reactions from the target to a leaf.
  int depth() const {
    auto idx = step_index();
    std::map<std::string, int> memo;
    // Iterative worklist would do; routes are tiny, recursion via lambda.
    std::function<int(const std::string&)> go =
        [&](const std::string& mol) -> int {
      auto it = idx.find(mol);
      if (it == idx.end()) return 0;
      auto m = memo.find(mol);
      if (m != memo.end()) return m->second;
      int best = 0;
      for (const std::string& r : it->second->reactants)
        best = std::max(best, go(r));
      memo[mol] = best + 1;
      return best + 1;
    };
    return go(target);
  }
};

inline nlohmann::json route_to_json(const Route& r) {
  nlohmann::json steps = nlohmann::json::array();
  for (const RouteStep& s : r.steps) {
    steps.push_back(nlohmann::json{{"product", s.product},
                                   {"reactants", s.reactants},
                                   {"rule_id", s.rule_id},
                                   {"logp", s.logp}});
  }
  return nlohmann::json{
      {"target", r.target}, {"log_prob", r.log_prob}, {"steps", steps}};
}

inline Route route_from_json(const nlohmann::json& j) {
  Route r;
  r.target = j.at("target").get<std::string>();
  r.log_prob = j.at("log_prob").get<double>();
  for (const auto& js : j.at("steps")) {
    RouteStep s;
    s.product = js.at("product").get<std::string>();
    s.reactants = js.at("reactants").get<ReactantSet>();
    s.rule_id = js.at("rule_id").get<std::string>();
    s.logp = js.at("logp").get<double>();
    r.steps.push_back(std::move(s));
  }
  return r;
}

// Canonical serialization: steps rewritten in pre-order with reactants
// visited in sorted order. Used for deduplication and tie-breaking.
inline Route normalize_route(const Route& r) {
  auto idx = r.step_index();
  Route out;
  out.target = r.target;
  out.log_prob = r.log_prob;
  std::set<std::string> emitted;
  std::function<void(const std::string&)> visit =
      [&](const std::string& mol) {
        auto it = idx.find(mol);
        if (it == idx.end() || emitted.count(mol)) return;
        emitted.insert(mol);
        out.steps.push_back(*it->second);
        for (const std::string& reactant : it->second->reactants)
          visit(reactant);
      };
  visit(r.target);
  if (out.steps.size() != r.steps.size())
    throw std::invalid_argument("route has steps unreachable from target");
  return out;
}

inline std::string route_key(const Route& r) {
  return route_to_json(normalize_route(r)).dump();
}

// Structural identity: ignores log probabilities so a reference route and
// the same route rediscovered by a planner deduplicate.
inline std::string route_struct_key(const Route& r) {
  Route n = normalize_route(r);
  std::string key = n.target;
  for (const RouteStep& s : n.steps) {
    key += '|';
    key += s.product;
    key += '<';
    key += s.rule_id;
    for (const std::string& m : s.reactants) {
      key += ',';
      key += m;
    }
  }
  return key;
}

}  // namespace synthplan
