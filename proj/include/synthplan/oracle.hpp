#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "synthplan/fingerprint.hpp"
#include "synthplan/molgraph.hpp"
#include "synthplan/reaction.hpp"

namespace synthplan {

struct FpConfig {
  int radius = 2;
  int nbits = 1024;
};

// Canonical-string keyed fingerprint cache; molecules repeat heavily across
// oracle calls and planning.
class FpCache {
 public:
  explicit FpCache(FpConfig config) : config_(config) {}

  FpConfig config() const { return config_; }

  const Fingerprint& get(const std::string& canon) {
    auto it = map_.find(canon);
    if (it != map_.end()) return it->second;
    Fingerprint fp =
        morgan_fingerprint(parse_smiles(canon), config_.radius, config_.nbits);
    return map_.emplace(canon, std::move(fp)).first->second;
  }

 private:
  FpConfig config_;
  std::unordered_map<std::string, Fingerprint> map_;
};

struct OracleLimits {
  int depth_limit = 6;
  int width = 24;  // new molecules kept per level
};

struct OracleResult {
  std::string molecule;  // canonical
  double similarity = 0.0;
};

// Breadth-limited forward simulation: starting from `materials`, apply every
// rule to every pair in the growing pool, keep at most `width` new molecules
// per level ranked by Tanimoto similarity to the target, and return the
// reachable molecule most similar to the target (inputs included). Stops
// early once the target itself appears.
inline OracleResult forward_oracle(const std::vector<std::string>& materials,
                                   const std::string& target,
                                   const std::vector<ReactionRule>& rules,
                                   const OracleLimits& limits,
                                   FpCache& fps) {
  if (materials.empty())
    throw std::invalid_argument("forward_oracle: empty material set");
  const Fingerprint& target_fp = fps.get(target);

  struct PoolEntry {
    std::string canon;
    MolGraph mol;
  };
  std::vector<PoolEntry> pool;
  std::unordered_map<std::string, int> index;
  auto add = [&](const std::string& canon) -> bool {
    if (index.count(canon)) return false;
    index[canon] = static_cast<int>(pool.size());
    pool.push_back(PoolEntry{canon, parse_smiles(canon)});
    return true;
  };

  OracleResult best{"", -1.0};
  auto consider = [&](const std::string& canon) {
    double sim = tanimoto(fps.get(canon), target_fp);
    if (sim > best.similarity ||
        (sim == best.similarity && canon < best.molecule)) {
      best = OracleResult{canon, sim};
    }
  };

  for (const std::string& m : materials) {
    if (add(m)) consider(m);
  }
  if (index.count(target)) return best;  // sim is 1.0 by identity

  // Forward application only grows molecules (a join of n1 and n2 atoms has
  // n1 + n2 - 2), so nothing larger than the target can ever lead to it.
  // Skipping oversized joins before canonicalization is the main cost saver.
  const int target_atoms = parse_smiles(target).atom_count();

  std::size_t frontier_begin = 0;  // entries at or past this are new
  for (int level = 0; level < limits.depth_limit; ++level) {
    std::size_t frontier_end = pool.size();
    std::unordered_map<std::string, double> fresh;  // canon -> similarity
    for (const ReactionRule& rule : rules) {
      std::vector<int> side_a, side_b;
      for (int i = 0; i < static_cast<int>(frontier_end); ++i) {
        if (!detail::cap_sites(pool[i].mol, rule.cap_a, rule.a).empty())
          side_a.push_back(i);
        if (!detail::cap_sites(pool[i].mol, rule.cap_b, rule.b).empty())
          side_b.push_back(i);
      }
      for (int ia : side_a) {
        for (int ib : side_b) {
          // Only pairs touching the newest level add products not already
          // tried in an earlier level.
          if (ia < static_cast<int>(frontier_begin) &&
              ib < static_cast<int>(frontier_begin))
            continue;
          if (pool[ia].mol.atom_count() + pool[ib].mol.atom_count() - 2 >
              target_atoms)
            continue;
          auto product =
              apply_forward_rule(rule, {pool[ia].mol, pool[ib].mol});
          if (!product) continue;
          std::string canon = canonical_smiles(*product);
          if (index.count(canon) || fresh.count(canon)) continue;
          fresh[canon] = tanimoto(fps.get(canon), target_fp);
        }
      }
    }
    if (fresh.empty()) break;
    std::vector<std::pair<std::string, double>> ranked(fresh.begin(),
                                                       fresh.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
      if (x.second != y.second) return x.second > y.second;
      return x.first < y.first;
    });
    if (static_cast<int>(ranked.size()) > limits.width)
      ranked.resize(limits.width);
    frontier_begin = frontier_end;
    for (const auto& [canon, sim] : ranked) {
      add(canon);
      consider(canon);
      if (canon == target) return best;
    }
  }
  return best;
}

}  // namespace synthplan
