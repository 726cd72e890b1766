#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "synthplan/fingerprint.hpp"
#include "synthplan/molgraph.hpp"
#include "synthplan/reaction.hpp"
#include "synthplan/rng.hpp"
#include "synthplan/route.hpp"

namespace synthplan {

struct BenchmarkConfig {
  int num_rules = 12;
  int inventory_size = 60;
  int molecule_budget = 3400;  // distinct molecules incl. inventory
  int max_depth = 6;
  int max_atoms = 12;
  int reference_cap = 8;       // reference routes retained per target
  long growth_attempts = 4'000'000;

  void validate() const {
    if (inventory_size < 20)
      throw std::invalid_argument("inventory_size must be >= 20");
    if (num_rules < 5) throw std::invalid_argument("num_rules must be >= 5");
    if (max_depth < 2 || max_depth > 6)
      throw std::invalid_argument("max_depth must be in [2, 6]");
    if (molecule_budget <= inventory_size)
      throw std::invalid_argument("molecule_budget must exceed inventory");
    if (inventory_size < 2 * num_rules)
      throw std::invalid_argument(
          "inventory_size must be >= 2 * num_rules (cap-motif seeds)");
    if (max_atoms < 6) throw std::invalid_argument("max_atoms must be >= 6");
    if (reference_cap < 1)
      throw std::invalid_argument("reference_cap must be >= 1");
  }
};

struct Benchmark {
  BenchmarkConfig config;
  std::vector<ReactionRule> rules;
  std::vector<std::string> inventory;         // creation order
  std::set<std::string> inventory_set;
  std::vector<std::string> molecules;         // creation order, inventory first
  std::vector<ReactionRecord> reactions;
  std::vector<std::string> train, val, test;
  std::map<std::string, std::vector<Route>> references;  // per target

  bool is_starting_material(const std::string& canon) const {
    return inventory_set.count(canon) != 0;
  }

  // Minimal synthesis depth per molecule: 0 for inventory, else the minimum
  // over producing reactions of 1 + max reactant depth. Unreachable
  // molecules are absent.
  std::map<std::string, int> min_depths() const {
    std::map<std::string, int> depth;
    for (const std::string& m : inventory) depth[m] = 0;
    bool changed = true;
    while (changed) {
      changed = false;
      for (const ReactionRecord& rec : reactions) {
        int worst = 0;
        bool known = true;
        for (const std::string& r : rec.reactants) {
          auto it = depth.find(r);
          if (it == depth.end()) {
            known = false;
            break;
          }
          worst = std::max(worst, it->second);
        }
        if (!known) continue;
        int candidate = worst + 1;
        auto it = depth.find(rec.product);
        if (it == depth.end() || candidate < it->second) {
          depth[rec.product] = candidate;
          changed = true;
        }
      }
    }
    return depth;
  }
};

namespace detail {

inline std::string rule_signature(const ReactionRule& r) {
  // Orientation-normalized identity: (a, cap_a) and (b, cap_b) travel
  // together when the anchors swap.
  std::string sa = symbol(r.a), sb = symbol(r.b);
  std::string ca = symbol(r.cap_a), cb = symbol(r.cap_b);
  if (sb < sa || (sa == sb && cb < ca)) {
    std::swap(sa, sb);
    std::swap(ca, cb);
  }
  return sa + "." + sb + "." + std::to_string(r.order) + "." + ca + "." + cb;
}

// Exact invertibility filter: a molecule enters the benchmark only if every
// retro outcome of every rule forward-reconstructs it. Keeps the forward
// tie-break (smallest canonical product) consistent with retro.
inline bool duality_clean(const MolGraph& mol, const std::string& canon,
                          const std::vector<ReactionRule>& rules) {
  for (const ReactionRule& rule : rules) {
    for (const ReactantSet& rs : apply_retro_rule(rule, mol)) {
      std::vector<MolGraph> reactants{parse_smiles(rs[0]), parse_smiles(rs[1])};
      auto rebuilt = apply_forward_rule(rule, reactants);
      if (!rebuilt || canonical_smiles(*rebuilt) != canon) return false;
    }
  }
  return true;
}

// A grown product is kept only if every applicable rule matches exactly one
// bond in it. Then the recorded disconnection is the unique outcome of its
// rule, so the per-rule probability mass is never diluted across sibling
// outcomes of the same rule.
inline bool single_outcome_per_rule(const MolGraph& mol,
                                    const std::vector<ReactionRule>& rules) {
  for (const ReactionRule& rule : rules)
    if (apply_retro_rule(rule, mol).size() > 1) return false;
  return true;
}

inline Element weighted_element(Rng& rng) {
  // C-heavy alphabet with halogens present so cap motifs occur naturally.
  static constexpr Element table[] = {
      Element::C, Element::C, Element::C, Element::C, Element::C,
      Element::N, Element::N, Element::O, Element::O, Element::S,
      Element::P, Element::F, Element::Cl, Element::Br, Element::I};
  return table[rng.below(std::size(table))];
}

inline Element weighted_anchor(Rng& rng) {
  // Rule bonds connect C/N/O anchors. Together with three bond orders this
  // gives 18 possible bond patterns, so the handful of sampled rule
  // families rarely collide on the same pattern and a molecule's joinable
  // bonds are mostly unique per family.
  static constexpr Element table[] = {Element::C, Element::N, Element::O};
  return table[rng.below(std::size(table))];
}

inline int rule_order(Rng& rng) {
  static constexpr int table[] = {1, 2, 3};
  return table[rng.below(std::size(table))];
}

inline Element random_cap(Rng& rng) {
  // Caps are halogen leaving groups; the small alphabet keeps most halogen
  // leaves reactive under some rule, which sustains network growth.
  static constexpr Element table[] = {Element::F, Element::Cl, Element::Br,
                                      Element::I};
  return table[rng.below(std::size(table))];
}

inline int weighted_order(Rng& rng) {
  static constexpr int table[] = {1, 1, 1, 1, 2, 2, 3};
  return table[rng.below(std::size(table))];
}

inline MolGraph random_tree(Rng& rng, int max_atoms) {
  int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_atoms)));
  MolGraph mol;
  mol.atoms.push_back(weighted_element(rng));
  for (int i = 1; i < n; ++i) {
    int parent = static_cast<int>(rng.below(i));
    mol.atoms.push_back(weighted_element(rng));
    mol.bonds.push_back(Bond{parent, i, weighted_order(rng)});
  }
  return mol;
}

}  // namespace detail

// Rules come in cap-variant pairs: two rules disconnect the same bond
// pattern but install different halogen caps. A product carries no trace of
// the caps its precursors wore, so choosing between the variants is exactly
// the kind of decision a retrosynthesis model has to learn from recorded
// reactions. Distinct bond patterns across pairs keep the number of
// outcomes per rule small.
inline std::vector<ReactionRule> generate_rules(Rng& rng, int num_rules) {
  std::vector<ReactionRule> rules;
  std::set<std::string> signatures;
  std::set<std::string> families;
  long guard = 0;
  while (static_cast<int>(rules.size()) < num_rules) {
    if (++guard > 100000)
      throw std::runtime_error("rule generation stalled");
    ReactionRule r;
    r.a = detail::weighted_anchor(rng);
    r.b = detail::weighted_anchor(rng);
    r.order = detail::rule_order(rng);
    // Symmetric patterns (a == b) would double every bond's outcome count
    // (either fragment can take either cap), diluting the per-outcome
    // probability the planner works with.
    if (r.a == r.b) continue;
    std::string sa = symbol(r.a), sb = symbol(r.b);
    if (sb < sa) std::swap(sa, sb);
    std::string family = sa + "." + sb + "." + std::to_string(r.order);
    if (families.count(family)) continue;
    families.insert(family);
    for (int variant = 0; variant < 2; ++variant) {
      if (static_cast<int>(rules.size()) >= num_rules) break;
      ReactionRule v = r;
      long inner = 0;
      do {
        if (++inner > 100000)
          throw std::runtime_error("rule generation stalled");
        v.cap_a = detail::random_cap(rng);
        v.cap_b = detail::random_cap(rng);
      } while (signatures.count(detail::rule_signature(v)));
      signatures.insert(detail::rule_signature(v));
      v.id = "r" + std::to_string(rules.size());
      rules.push_back(v);
    }
  }
  return rules;
}

// Seeded benchmark construction: sample an inventory of small trees, grow a
// reaction network by repeated forward applications, pick targets by minimal
// synthesis depth, split them 80/10/10 and extract reference routes.
// A pure function of (config, seed).
inline Benchmark generate_benchmark(const BenchmarkConfig& config,
                                    std::uint64_t seed);

// Backward traversal over the recorded reactions; each consistent choice of
// producing reaction per intermediate yields one route, enumerated
// depth-first in record order and truncated at `cap`.
inline std::vector<Route> extract_reference_routes(const Benchmark& bench,
                                                   const std::string& target,
                                                   int cap) {
  if (bench.is_starting_material(target))
    throw std::invalid_argument("target is a starting material");
  std::map<std::string, std::vector<int>> producers;
  for (std::size_t i = 0; i < bench.reactions.size(); ++i)
    producers[bench.reactions[i].product].push_back(static_cast<int>(i));

  using StepMap = std::map<std::string, int>;  // molecule -> record index
  std::map<std::string, std::vector<StepMap>> memo;
  std::function<const std::vector<StepMap>&(const std::string&)> expand =
      [&](const std::string& mol) -> const std::vector<StepMap>& {
    auto hit = memo.find(mol);
    if (hit != memo.end()) return hit->second;
    std::vector<StepMap> options;
    if (bench.is_starting_material(mol)) {
      options.push_back({});
    } else {
      for (int rec_idx : producers[mol]) {
        const ReactionRecord& rec = bench.reactions[rec_idx];
        std::vector<StepMap> partial{{{mol, rec_idx}}};
        for (const std::string& reactant : rec.reactants) {
          std::vector<StepMap> merged;
          for (const StepMap& base : partial) {
            for (const StepMap& sub : expand(reactant)) {
              StepMap combined = base;
              bool consistent = true;
              for (const auto& [m, idx] : sub) {
                auto it = combined.find(m);
                if (it != combined.end() && it->second != idx) {
                  consistent = false;
                  break;
                }
                combined[m] = idx;
              }
              if (consistent) merged.push_back(std::move(combined));
              if (static_cast<int>(merged.size()) >= cap) break;
            }
            if (static_cast<int>(merged.size()) >= cap) break;
          }
          partial = std::move(merged);
          if (partial.empty()) break;
        }
        for (StepMap& sm : partial) {
          options.push_back(std::move(sm));
          if (static_cast<int>(options.size()) >= cap) break;
        }
        if (static_cast<int>(options.size()) >= cap) break;
      }
    }
    return memo.emplace(mol, std::move(options)).first->second;
  };

  const std::vector<StepMap>& solutions = expand(target);
  if (solutions.empty())
    throw std::invalid_argument("target has no producing reaction: " + target);
  std::vector<Route> routes;
  for (const StepMap& sm : solutions) {
    Route r;
    r.target = target;
    r.log_prob = 0.0;
    for (const auto& [mol, rec_idx] : sm) {
      const ReactionRecord& rec = bench.reactions[rec_idx];
      r.steps.push_back(RouteStep{mol, rec.reactants, rec.rule_id, 0.0});
    }
    routes.push_back(normalize_route(r));
  }
  return routes;
}

namespace detail {

struct GrowthStall : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline Benchmark generate_benchmark_once(const BenchmarkConfig& config,
                                         std::uint64_t rng_seed) {
  Benchmark bench;
  bench.config = config;
  Rng rng(rng_seed);
  bench.rules = generate_rules(rng, config.num_rules);

  // Molecules indexed by the cap motifs they expose, so reactant pairs for a
  // rule are drawn from molecules that can actually react.
  std::unordered_map<std::string, int> creation_index;  // canon -> index
  std::unordered_map<std::string, MolGraph> graphs;
  std::map<std::pair<Element, Element>, std::vector<int>> by_motif;
  auto admit = [&](const std::string& canon) {
    int idx = static_cast<int>(bench.molecules.size());
    creation_index[canon] = idx;
    const MolGraph& mol =
        graphs.emplace(canon, parse_smiles(canon)).first->second;
    bench.molecules.push_back(canon);
    std::set<std::pair<Element, Element>> motifs;
    auto adj = mol.adjacency();
    for (int v = 0; v < mol.atom_count(); ++v) {
      if (adj[v].size() != 1 || adj[v][0].second != 1) continue;
      motifs.insert({mol.atoms[v], mol.atoms[adj[v][0].first]});
    }
    for (const auto& m : motifs) by_motif[m].push_back(idx);
    return idx;
  };

  // Inventory: one minimal molecule per rule cap motif (so every rule can
  // fire) plus distinct random small trees; everything must keep the world
  // exactly invertible.
  for (const ReactionRule& rule : bench.rules) {
    for (auto [anchor, cap] : {std::pair{rule.a, rule.cap_a},
                               std::pair{rule.b, rule.cap_b}}) {
      MolGraph seed;
      seed.atoms = {anchor, cap};
      seed.bonds = {Bond{0, 1, 1}};
      std::string canon = canonical_smiles(seed);
      if (creation_index.count(canon)) continue;
      if (!detail::duality_clean(seed, canon, bench.rules)) continue;
      admit(canon);
      bench.inventory.push_back(canon);
    }
  }
  // Small halogenated synthons: every anchor with one or two halogen
  // substituents. Retro steps append caps, so decomposition chains bottom
  // out in exactly these pieces; stocking them keeps alternative
  // disconnections viable instead of dead-ending one level above the seeds.
  {
    static constexpr Element anchors[] = {Element::C, Element::N, Element::O};
    static constexpr Element hals[] = {Element::F, Element::Cl, Element::Br,
                                       Element::I};
    auto try_admit = [&](const MolGraph& mol) {
      if (static_cast<int>(bench.inventory.size()) >= config.inventory_size)
        return;
      std::string canon = canonical_smiles(mol);
      if (creation_index.count(canon)) return;
      if (!detail::duality_clean(mol, canon, bench.rules)) return;
      admit(canon);
      bench.inventory.push_back(canon);
    };
    for (Element a : anchors)
      for (Element h : hals) {
        MolGraph mol;
        mol.atoms = {a, h};
        mol.bonds = {Bond{0, 1, 1}};
        try_admit(mol);
      }
    for (Element a : anchors)
      for (std::size_t i = 0; i < std::size(hals); ++i)
        for (std::size_t j = i; j < std::size(hals); ++j) {
          MolGraph mol;
          mol.atoms = {a, hals[i], hals[j]};
          mol.bonds = {Bond{0, 1, 1}, Bond{0, 2, 1}};
          try_admit(mol);
        }
  }
  long guard = 0;
  while (static_cast<int>(bench.inventory.size()) < config.inventory_size) {
    if (++guard > 1000000)
      throw GrowthStall("inventory sampling stalled");
    MolGraph mol = detail::random_tree(rng, 4);
    // Graft rule cap motifs onto most leaves so molecules can react and
    // their products keep reacting (joins consume one cap per reactant).
    {
      auto adj = mol.adjacency();
      for (int v = 0; v < mol.atom_count(); ++v) {
        if (adj[v].size() != 1 || adj[v][0].second != 1) continue;
        if (rng.below(8) == 0) continue;
        const ReactionRule& rule = bench.rules[rng.below(bench.rules.size())];
        auto [anchor, cap] = rng.below(2) == 0
                                 ? std::pair{rule.a, rule.cap_a}
                                 : std::pair{rule.b, rule.cap_b};
        mol.atoms[v] = cap;
        mol.atoms[adj[v][0].first] = anchor;
      }
    }
    std::string canon = canonical_smiles(mol);
    if (creation_index.count(canon)) continue;
    if (!detail::duality_clean(mol, canon, bench.rules)) continue;
    admit(canon);
    bench.inventory.push_back(canon);
  }
  bench.inventory_set = std::set<std::string>(bench.inventory.begin(),
                                              bench.inventory.end());

  // Network growth: random rule, reactants drawn from molecules exposing the
  // rule's cap motifs (biased toward recent molecules so deep products
  // appear), forward application, invertibility filter. Records form a DAG
  // because a reaction is only kept when both reactants were created before
  // the product.
  // The recorded cap variant within a bond family is a deterministic
  // function of the product: each family owns a set of fingerprint bits,
  // and the variant is picked by whether any environment rooted at one of
  // the product's halogen atoms hashes into that set. An OR of
  // fingerprint-bit presences is exactly the kind of decision boundary a
  // linear classifier over the same fingerprint can express, so the choice
  // is learnable from the product a proposer is asked to disconnect. But
  // halogen-rooted environments are precisely what later joins destroy
  // (caps are consumed), so the deeper cap choices of a route cannot be
  // read back off the final target or the leaf set alone.
  std::map<std::string, int> variant_of;        // rule id -> 0/1 in family
  std::map<std::string, std::string> family_of;  // rule id -> family key
  std::map<std::string, std::set<int>> family_bits;
  {
    std::map<std::string, int> seen;
    for (const ReactionRule& r : bench.rules) {
      std::string sa = symbol(r.a), sb = symbol(r.b);
      if (sb < sa) std::swap(sa, sb);
      std::string fam = sa + "." + sb + "." + std::to_string(r.order);
      family_of[r.id] = fam;
      variant_of[r.id] = seen[fam]++;
      std::set<int>& bits = family_bits[fam];
      if (bits.empty())
        for (int i = 0; i < 64; ++i)
          bits.insert(static_cast<int>(
              fnv1a64(fam + ":" + std::to_string(i)) % 1024));
    }
  }
  auto preferred_variant = [&](const ReactionRule& rule,
                               const MolGraph& product) {
    const std::set<int>& sel = family_bits.at(family_of.at(rule.id));
    auto adj = product.adjacency();
    for (int a = 0; a < product.atom_count(); ++a) {
      Element e = product.atoms[a];
      if (e != Element::F && e != Element::Cl && e != Element::Br &&
          e != Element::I)
        continue;
      for (int r = 0; r <= 2; ++r) {
        std::string code = detail::ball_code(product, adj, a, -1, r);
        if (sel.count(static_cast<int>(fnv1a64(code) % 1024))) return 0;
      }
    }
    return 1;
  };

  std::set<std::string> record_keys;
  auto pick = [&](const std::vector<int>& pool) {
    if (rng.below(2) == 0 && pool.size() > 8) {
      // Recent-quartile pick drives the network deeper.
      std::size_t lo = pool.size() - pool.size() / 4;
      return pool[lo + rng.below(pool.size() - lo)];
    }
    return pool[rng.below(pool.size())];
  };
  long attempts = 0;
  while (static_cast<int>(bench.molecules.size()) < config.molecule_budget &&
         attempts < config.growth_attempts) {
    ++attempts;
    const ReactionRule& rule =
        bench.rules[rng.below(bench.rules.size())];
    const std::vector<int>& side_a = by_motif[{rule.cap_a, rule.a}];
    const std::vector<int>& side_b = by_motif[{rule.cap_b, rule.b}];
    if (side_a.empty() || side_b.empty()) continue;
    int i1 = pick(side_a);
    int i2 = pick(side_b);
    const MolGraph& m1 = graphs[bench.molecules[i1]];
    const MolGraph& m2 = graphs[bench.molecules[i2]];
    auto product = apply_forward_rule(rule, {m1, m2});
    if (!product || product->atom_count() > config.max_atoms) continue;
    if (variant_of.at(rule.id) != preferred_variant(rule, *product)) continue;
    std::string canon = canonical_smiles(*product);
    auto existing = creation_index.find(canon);
    int product_index;
    if (existing == creation_index.end()) {
      if (!detail::duality_clean(*product, canon, bench.rules)) continue;
      if (!detail::single_outcome_per_rule(*product, bench.rules)) continue;
      product_index = admit(canon);
    } else {
      product_index = existing->second;
      if (i1 >= product_index || i2 >= product_index)
        continue;  // would break the creation-order DAG
    }
    ReactantSet rs{bench.molecules[i1], bench.molecules[i2]};
    std::sort(rs.begin(), rs.end());
    std::string key = canon + "<" + rule.id + "<" + rs[0] + "," + rs[1];
    if (record_keys.count(key)) continue;
    record_keys.insert(key);
    bench.reactions.push_back(ReactionRecord{canon, std::move(rs), rule.id});
  }
  if (static_cast<int>(bench.molecules.size()) < config.molecule_budget)
    throw GrowthStall("benchmark growth budget unreachable; molecules: " +
                      std::to_string(bench.molecules.size()));

  // Shuffle the record list so reference extraction (first producer in
  // record order) picks an arbitrary decomposition per product instead of
  // systematically favouring growth-phase records; otherwise "reference
  // materials" would carry a global creation-order signature.
  rng.shuffle(bench.reactions);

  // Targets: molecules with minimal synthesis depth in [2, max_depth].
  auto depths = bench.min_depths();
  std::vector<std::string> targets;
  for (const std::string& mol : bench.molecules) {
    if (bench.is_starting_material(mol)) continue;
    auto it = depths.find(mol);
    if (it != depths.end() && it->second >= 2 && it->second <= config.max_depth)
      targets.push_back(mol);
  }
  std::sort(targets.begin(), targets.end());
  rng.shuffle(targets);
  std::size_t n = targets.size();
  std::size_t n_train = n * 8 / 10;
  std::size_t n_val = n / 10;
  bench.train.assign(targets.begin(), targets.begin() + n_train);
  bench.val.assign(targets.begin() + n_train,
                   targets.begin() + n_train + n_val);
  bench.test.assign(targets.begin() + n_train + n_val, targets.end());

  for (const std::string& t : targets)
    bench.references[t] =
        extract_reference_routes(bench, t, config.reference_cap);
  return bench;
}

}  // namespace detail

inline Benchmark generate_benchmark(const BenchmarkConfig& config,
                                    std::uint64_t seed) {
  config.validate();
  // Some rule draws make the reachable chemical space too small for the
  // molecule budget. Retrying with a seed-derived stream keeps the function
  // deterministic in (config, seed) while making stalls vanishingly rare.
  std::string last_error;
  for (int attempt = 0; attempt < 16; ++attempt) {
    std::uint64_t rng_seed =
        attempt == 0 ? seed
                     : seed + 0x9e3779b97f4a7c15ULL *
                                  static_cast<std::uint64_t>(attempt);
    try {
      return detail::generate_benchmark_once(config, rng_seed);
    } catch (const detail::GrowthStall& e) {
      last_error = e.what();
    }
  }
  throw std::runtime_error("benchmark generation failed after retries: " +
                           last_error);
}

// ---- on-disk layout: rules.jsonl, inventory.txt, reactions.jsonl,
//      splits.json, references.jsonl, config.json ----

inline nlohmann::json config_to_json(const BenchmarkConfig& c) {
  return nlohmann::json{{"num_rules", c.num_rules},
                        {"inventory_size", c.inventory_size},
                        {"molecule_budget", c.molecule_budget},
                        {"max_depth", c.max_depth},
                        {"max_atoms", c.max_atoms},
                        {"reference_cap", c.reference_cap},
                        {"growth_attempts", c.growth_attempts}};
}

inline BenchmarkConfig config_from_json(const nlohmann::json& j) {
  BenchmarkConfig c;
  if (j.contains("num_rules")) c.num_rules = j["num_rules"].get<int>();
  if (j.contains("inventory_size"))
    c.inventory_size = j["inventory_size"].get<int>();
  if (j.contains("molecule_budget"))
    c.molecule_budget = j["molecule_budget"].get<int>();
  if (j.contains("max_depth")) c.max_depth = j["max_depth"].get<int>();
  if (j.contains("max_atoms")) c.max_atoms = j["max_atoms"].get<int>();
  if (j.contains("reference_cap"))
    c.reference_cap = j["reference_cap"].get<int>();
  if (j.contains("growth_attempts"))
    c.growth_attempts = j["growth_attempts"].get<long>();
  return c;
}

inline void save_benchmark(const Benchmark& bench, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  save_rules(bench.rules, dir + "/rules.jsonl");
  {
    std::ofstream out(dir + "/inventory.txt");
    for (const std::string& m : bench.inventory) out << m << "\n";
  }
  {
    std::ofstream out(dir + "/reactions.jsonl");
    for (const ReactionRecord& rec : bench.reactions)
      out << nlohmann::json{{"product", rec.product},
                            {"reactants", rec.reactants},
                            {"rule_id", rec.rule_id}}
                 .dump()
          << "\n";
  }
  {
    std::ofstream out(dir + "/splits.json");
    out << nlohmann::json{{"train", bench.train},
                          {"val", bench.val},
                          {"test", bench.test}}
               .dump(2)
        << "\n";
  }
  {
    std::ofstream out(dir + "/references.jsonl");
    for (const auto& [target, routes] : bench.references) {
      nlohmann::json jroutes = nlohmann::json::array();
      for (const Route& r : routes) jroutes.push_back(route_to_json(r));
      out << nlohmann::json{{"target", target}, {"routes", jroutes}}.dump()
          << "\n";
    }
  }
  {
    std::ofstream out(dir + "/config.json");
    out << config_to_json(bench.config).dump(2) << "\n";
  }
}

inline Benchmark load_benchmark(const std::string& dir) {
  Benchmark bench;
  {
    std::ifstream in(dir + "/config.json");
    if (in) {
      nlohmann::json j;
      in >> j;
      bench.config = config_from_json(j);
    }
  }
  bench.rules = load_rules(dir + "/rules.jsonl");
  {
    std::ifstream in(dir + "/inventory.txt");
    if (!in) throw std::runtime_error("cannot read " + dir + "/inventory.txt");
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) bench.inventory.push_back(line);
  }
  bench.inventory_set = std::set<std::string>(bench.inventory.begin(),
                                              bench.inventory.end());
  bench.molecules = bench.inventory;
  std::set<std::string> seen(bench.molecules.begin(), bench.molecules.end());
  {
    std::ifstream in(dir + "/reactions.jsonl");
    if (!in)
      throw std::runtime_error("cannot read " + dir + "/reactions.jsonl");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line);
      ReactionRecord rec;
      rec.product = j.at("product").get<std::string>();
      rec.reactants = j.at("reactants").get<ReactantSet>();
      rec.rule_id = j.at("rule_id").get<std::string>();
      if (!seen.count(rec.product)) {
        seen.insert(rec.product);
        bench.molecules.push_back(rec.product);
      }
      bench.reactions.push_back(std::move(rec));
    }
  }
  {
    std::ifstream in(dir + "/splits.json");
    if (!in) throw std::runtime_error("cannot read " + dir + "/splits.json");
    nlohmann::json j;
    in >> j;
    bench.train = j.at("train").get<std::vector<std::string>>();
    bench.val = j.at("val").get<std::vector<std::string>>();
    bench.test = j.at("test").get<std::vector<std::string>>();
  }
  {
    std::ifstream in(dir + "/references.jsonl");
    if (!in)
      throw std::runtime_error("cannot read " + dir + "/references.jsonl");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line);
      std::vector<Route> routes;
      for (const auto& jr : j.at("routes")) routes.push_back(route_from_json(jr));
      bench.references[j.at("target").get<std::string>()] = std::move(routes);
    }
  }
  return bench;
}

}  // namespace synthplan
