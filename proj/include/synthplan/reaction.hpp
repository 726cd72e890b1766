#pragma once

#include <algorithm>
#include <array>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthplan/molgraph.hpp"

namespace synthplan {

// A bond-split retro template with an exact forward inverse: retro deletes a
// matching (a, b, order) bond and caps the two fragments; forward removes the
// caps and rejoins the fragments with the pattern's bond order.
struct ReactionRule {
  std::string id;
  Element a = Element::C;
  Element b = Element::C;
  int order = 1;
  Element cap_a = Element::Cl;
  Element cap_b = Element::Cl;
};

// Two reactant molecules as sorted canonical strings. Equal strings are
// allowed (the same material used twice).
using ReactantSet = std::vector<std::string>;

struct ReactionRecord {
  std::string product;
  ReactantSet reactants;
  std::string rule_id;
};

namespace detail {

inline MolGraph capped_fragment(const MolGraph& mol, int start, int banned,
                                Element cap) {
  // Collect the fragment reachable from `start` without crossing `banned`,
  // then attach the cap atom to `start` with a single bond.
  auto adj = mol.adjacency();
  std::vector<int> order;
  std::vector<int> remap(mol.atom_count(), -1);
  std::vector<int> stack{start};
  remap[start] = 0;
  order.push_back(start);
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (auto [u, o] : adj[v]) {
      if (u == banned || remap[u] >= 0) continue;
      remap[u] = static_cast<int>(order.size());
      order.push_back(u);
      stack.push_back(u);
    }
  }
  MolGraph frag;
  for (int v : order) frag.atoms.push_back(mol.atoms[v]);
  for (const Bond& bd : mol.bonds) {
    if (remap[bd.a] >= 0 && remap[bd.b] >= 0)
      frag.bonds.push_back(Bond{remap[bd.a], remap[bd.b], bd.order});
  }
  int cap_idx = frag.atom_count();
  frag.atoms.push_back(cap);
  frag.bonds.push_back(Bond{remap[start], cap_idx, 1});
  return frag;
}

}  // namespace detail

// All ways to undo `rule` on `product`: every bond matching the pattern in
// either orientation is deleted, the fragments are capped, and the resulting
// 2-molecule sets are deduplicated and returned in lexicographic order.
inline std::vector<ReactantSet> apply_retro_rule(const ReactionRule& rule,
                                                 const MolGraph& product) {
  std::set<ReactantSet> seen;
  for (const Bond& bd : product.bonds) {
    if (bd.order != rule.order) continue;
    std::array<std::pair<int, int>, 2> orientations{
        std::pair{bd.a, bd.b}, std::pair{bd.b, bd.a}};
    for (auto [ia, ib] : orientations) {
      if (product.atoms[ia] != rule.a || product.atoms[ib] != rule.b) continue;
      MolGraph fa = detail::capped_fragment(product, ia, ib, rule.cap_a);
      MolGraph fb = detail::capped_fragment(product, ib, ia, rule.cap_b);
      ReactantSet rs{canonical_smiles(fa), canonical_smiles(fb)};
      std::sort(rs.begin(), rs.end());
      seen.insert(std::move(rs));
    }
  }
  return {seen.begin(), seen.end()};
}

namespace detail {

// Degree-1 atoms of element `cap` attached by a single bond to an atom of
// element `anchor`; returns the cap atom indices.
inline std::vector<int> cap_sites(const MolGraph& mol, Element cap,
                                  Element anchor) {
  auto adj = mol.adjacency();
  std::vector<int> sites;
  for (int v = 0; v < mol.atom_count(); ++v) {
    if (mol.atoms[v] != cap || adj[v].size() != 1) continue;
    auto [u, order] = adj[v][0];
    if (order == 1 && mol.atoms[u] == anchor) sites.push_back(v);
  }
  return sites;
}

inline MolGraph join_without_caps(const MolGraph& ma, int cap_site_a,
                                  const MolGraph& mb, int cap_site_b,
                                  int order) {
  auto adj_a = ma.adjacency();
  auto adj_b = mb.adjacency();
  int anchor_a = adj_a[cap_site_a][0].first;
  int anchor_b = adj_b[cap_site_b][0].first;
  MolGraph out;
  std::vector<int> remap_a(ma.atom_count(), -1);
  std::vector<int> remap_b(mb.atom_count(), -1);
  for (int v = 0; v < ma.atom_count(); ++v) {
    if (v == cap_site_a) continue;
    remap_a[v] = out.atom_count();
    out.atoms.push_back(ma.atoms[v]);
  }
  for (int v = 0; v < mb.atom_count(); ++v) {
    if (v == cap_site_b) continue;
    remap_b[v] = out.atom_count();
    out.atoms.push_back(mb.atoms[v]);
  }
  for (const Bond& bd : ma.bonds) {
    if (bd.a == cap_site_a || bd.b == cap_site_a) continue;
    out.bonds.push_back(Bond{remap_a[bd.a], remap_a[bd.b], bd.order});
  }
  for (const Bond& bd : mb.bonds) {
    if (bd.a == cap_site_b || bd.b == cap_site_b) continue;
    out.bonds.push_back(Bond{remap_b[bd.a], remap_b[bd.b], bd.order});
  }
  out.bonds.push_back(Bond{remap_a[anchor_a], remap_b[anchor_b], order});
  return out;
}

}  // namespace detail

// Inverse of apply_retro_rule. When several cap pairings exist the
// lexicographically smallest canonical product wins; no valid pairing yields
// nothing.
inline std::optional<MolGraph> apply_forward_rule(
    const ReactionRule& rule, const std::vector<MolGraph>& reactants) {
  if (reactants.size() != 2)
    throw std::invalid_argument("apply_forward_rule: need exactly 2 reactants");
  std::optional<std::string> best;
  std::optional<MolGraph> best_mol;
  for (int assignment = 0; assignment < 2; ++assignment) {
    const MolGraph& ma = reactants[assignment];
    const MolGraph& mb = reactants[1 - assignment];
    for (int sa : detail::cap_sites(ma, rule.cap_a, rule.a)) {
      for (int sb : detail::cap_sites(mb, rule.cap_b, rule.b)) {
        MolGraph joined =
            detail::join_without_caps(ma, sa, mb, sb, rule.order);
        std::string canon = canonical_smiles(joined);
        if (!best || canon < *best) {
          best = canon;
          best_mol = std::move(joined);
        }
      }
    }
  }
  return best_mol;
}

// ---- rules.jsonl ----

inline nlohmann::json rule_to_json(const ReactionRule& r) {
  return nlohmann::json{{"id", r.id},
                        {"bond", {symbol(r.a), symbol(r.b), r.order}},
                        {"cap_a", symbol(r.cap_a)},
                        {"cap_b", symbol(r.cap_b)}};
}

inline ReactionRule rule_from_json(const nlohmann::json& j) {
  auto elem = [](const std::string& s) {
    auto e = element_from_symbol(s);
    if (!e) throw std::invalid_argument("unknown element in rule: " + s);
    return *e;
  };
  ReactionRule r;
  r.id = j.at("id").get<std::string>();
  r.a = elem(j.at("bond").at(0).get<std::string>());
  r.b = elem(j.at("bond").at(1).get<std::string>());
  r.order = j.at("bond").at(2).get<int>();
  r.cap_a = elem(j.at("cap_a").get<std::string>());
  r.cap_b = elem(j.at("cap_b").get<std::string>());
  return r;
}

inline void save_rules(const std::vector<ReactionRule>& rules,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const ReactionRule& r : rules) out << rule_to_json(r).dump() << "\n";
}

inline std::vector<ReactionRule> load_rules(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<ReactionRule> rules;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rules.push_back(rule_from_json(nlohmann::json::parse(line)));
  }
  return rules;
}

}  // namespace synthplan
