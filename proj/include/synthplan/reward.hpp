#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "synthplan/oracle.hpp"
#include "synthplan/route.hpp"

namespace synthplan {

// Route-quality criteria. Each name maps to exactly one reward function;
// "feasibility" is the default and sums the forward-simulation and
// material-similarity terms.
enum class Criterion {
  Feasibility,
  MaterialSimilarity,
  ForwardFeasibility,
  ShortestRoute,
};

inline std::string to_string(Criterion c) {
  switch (c) {
    case Criterion::Feasibility: return "feasibility";
    case Criterion::MaterialSimilarity: return "material_similarity";
    case Criterion::ForwardFeasibility: return "forward_feasibility";
    case Criterion::ShortestRoute: return "shortest_route";
  }
  throw std::invalid_argument("bad criterion");
}

inline Criterion criterion_from_string(const std::string& s) {
  if (s == "feasibility") return Criterion::Feasibility;
  if (s == "material_similarity") return Criterion::MaterialSimilarity;
  if (s == "forward_feasibility") return Criterion::ForwardFeasibility;
  if (s == "shortest_route") return Criterion::ShortestRoute;
  throw std::invalid_argument("unknown criterion: " + s);
}

struct RewardContext {
  const std::vector<ReactionRule>* rules = nullptr;
  FpCache* fps = nullptr;
  OracleLimits oracle;
  double weight_forward = 1.0;
  double weight_material = 1.0;
};

inline Fingerprint fingerprint_union_cached(const std::set<std::string>& mols,
                                            FpCache& fps) {
  if (mols.empty())
    throw std::invalid_argument("fingerprint union of empty set");
  Fingerprint out;
  out.nbits = fps.config().nbits;
  for (const std::string& m : mols) {
    const Fingerprint& fp = fps.get(m);
    out.bits.insert(fp.bits.begin(), fp.bits.end());
  }
  return out;
}

// Heuristic route reward. Under "feasibility" this is the similarity of the
// forward-simulated product to the target plus the similarity of the route's
// starting materials to the reference materials.
inline double phi_reward(const Route& route, const std::string& target,
                         const std::set<std::string>& ref_materials,
                         Criterion criterion, RewardContext& ctx) {
  if (criterion == Criterion::ShortestRoute)
    return -static_cast<double>(route.steps.size());

  std::set<std::string> materials = route.leaves();
  double forward_term = 0.0;
  if (criterion == Criterion::Feasibility ||
      criterion == Criterion::ForwardFeasibility) {
    std::vector<std::string> mats(materials.begin(), materials.end());
    OracleResult res =
        forward_oracle(mats, target, *ctx.rules, ctx.oracle, *ctx.fps);
    forward_term = res.similarity;
  }
  double material_term = 0.0;
  if (criterion == Criterion::Feasibility ||
      criterion == Criterion::MaterialSimilarity) {
    if (ref_materials.empty())
      throw std::invalid_argument("criterion requires reference materials");
    material_term = tanimoto(fingerprint_union_cached(materials, *ctx.fps),
                             fingerprint_union_cached(ref_materials, *ctx.fps));
  }
  switch (criterion) {
    case Criterion::Feasibility:
      return ctx.weight_forward * forward_term +
             ctx.weight_material * material_term;
    case Criterion::ForwardFeasibility:
      return ctx.weight_forward * forward_term;
    case Criterion::MaterialSimilarity:
      return ctx.weight_material * material_term;
    default:
      throw std::invalid_argument("bad criterion");
  }
}

}  // namespace synthplan
