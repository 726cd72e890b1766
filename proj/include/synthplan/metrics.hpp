#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthplan/energy.hpp"
#include "synthplan/route.hpp"

namespace synthplan {

// Ranked predictions per target; vector order is the ranking.
using RoutesByTarget = std::map<std::string, std::vector<Route>>;

inline void save_routes_jsonl(const RoutesByTarget& routes,
                              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& [target, list] : routes)
    for (const Route& r : list) out << route_to_json(r).dump() << "\n";
}

inline RoutesByTarget load_routes_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  RoutesByTarget routes;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Route r = route_from_json(nlohmann::json::parse(line));
    routes[r.target].push_back(std::move(r));
  }
  return routes;
}

// Set-wise exact match: the prediction counts iff it equals the starting
// material set of at least one reference route.
inline bool exact_match_starting_materials(
    const std::set<std::string>& predicted,
    const std::vector<std::set<std::string>>& references) {
  if (references.empty())
    throw std::invalid_argument("exact match: no reference sets");
  for (const std::set<std::string>& ref : references)
    if (predicted == ref) return true;
  return false;
}

struct TargetRecord {
  std::string target;
  int matched_rank = 0;  // 1-based; 0 when no prediction matched
  int reference_depth = 0;
};

struct DepthBucket {
  int count = 0;
  int top1_hits = 0;

  double accuracy() const {
    return count == 0 ? 0.0 : 100.0 * top1_hits / count;
  }
};

struct EvalReport {
  std::string mode;
  int kmax = 5;
  std::vector<TargetRecord> records;        // sorted by target
  std::vector<double> topk_accuracy;        // percent, k = 1..kmax
  std::map<int, DepthBucket> depth_top1;    // keyed by reference depth

  nlohmann::json to_json() const {
    nlohmann::json jrecords = nlohmann::json::array();
    for (const TargetRecord& r : records)
      jrecords.push_back(nlohmann::json{{"target", r.target},
                                        {"matched_rank", r.matched_rank},
                                        {"reference_depth", r.reference_depth}});
    nlohmann::json jdepth;
    for (const auto& [depth, bucket] : depth_top1)
      jdepth[std::to_string(depth)] = nlohmann::json{
          {"count", bucket.count}, {"top1", bucket.accuracy()}};
    return nlohmann::json{{"mode", mode},
                          {"targets", records.size()},
                          {"topk", topk_accuracy},
                          {"depth_top1", jdepth},
                          {"records", jrecords}};
  }

  std::string to_csv() const {
    std::ostringstream out;
    out << "mode,metric,key,value\n";
    for (std::size_t k = 0; k < topk_accuracy.size(); ++k)
      out << mode << ",topk," << (k + 1) << "," << topk_accuracy[k] << "\n";
    for (const auto& [depth, bucket] : depth_top1) {
      out << mode << ",depth_count," << depth << "," << bucket.count << "\n";
      out << mode << ",depth_top1," << depth << "," << bucket.accuracy()
          << "\n";
    }
    return out.str();
  }
};

// Top-k set-wise exact match table plus the depth-bucketed top-1 view.
// Buckets key on the smallest reference route depth per target.
inline EvalReport evaluate_topk(
    const RoutesByTarget& results,
    const std::map<std::string, std::vector<Route>>& references, int kmax = 5,
    const std::string& mode = "") {
  EvalReport report;
  report.mode = mode;
  report.kmax = kmax;
  std::vector<int> hits_at(kmax, 0);
  for (const auto& [target, ranked] : results) {
    auto ref_it = references.find(target);
    if (ref_it == references.end() || ref_it->second.empty())
      throw std::invalid_argument("target without references: " + target);
    std::vector<std::set<std::string>> ref_sets;
    int ref_depth = 0;
    for (const Route& ref : ref_it->second) {
      ref_sets.push_back(ref.leaves());
      int d = ref.depth();
      if (ref_depth == 0 || d < ref_depth) ref_depth = d;
    }
    TargetRecord record;
    record.target = target;
    record.reference_depth = ref_depth;
    for (std::size_t k = 0; k < ranked.size() && k < static_cast<std::size_t>(kmax);
         ++k) {
      if (exact_match_starting_materials(ranked[k].leaves(), ref_sets)) {
        record.matched_rank = static_cast<int>(k) + 1;
        break;
      }
    }
    if (record.matched_rank > 0)
      for (int k = record.matched_rank - 1; k < kmax; ++k) ++hits_at[k];
    DepthBucket& bucket = report.depth_top1[ref_depth];
    ++bucket.count;
    if (record.matched_rank == 1) ++bucket.top1_hits;
    report.records.push_back(std::move(record));
  }
  std::sort(report.records.begin(), report.records.end(),
            [](const TargetRecord& x, const TargetRecord& y) {
              return x.target < y.target;
            });
  double n = static_cast<double>(report.records.size());
  for (int k = 0; k < kmax; ++k)
    report.topk_accuracy.push_back(n == 0 ? 0.0 : 100.0 * hits_at[k] / n);
  return report;
}

struct AblationReport {
  std::vector<EvalReport> modes;  // base, +E, E alone, -E
  nlohmann::json to_json() const {
    nlohmann::json jmodes = nlohmann::json::array();
    for (const EvalReport& r : modes) jmodes.push_back(r.to_json());
    nlohmann::json deltas;
    if (!modes.empty()) {
      double base = modes.front().topk_accuracy.empty()
                        ? 0.0
                        : modes.front().topk_accuracy.front();
      for (const EvalReport& r : modes)
        deltas[r.mode] = (r.topk_accuracy.empty() ? 0.0
                                                  : r.topk_accuracy.front()) -
                         base;
    }
    return nlohmann::json{{"modes", jmodes}, {"delta_top1", deltas}};
  }
  std::string to_csv() const {
    std::string out;
    for (const EvalReport& r : modes) out += r.to_csv();
    return out;
  }
};

// Re-ranks the same candidate pools four ways: base -log P, the residual
// -log P + E, the energy alone, and the sign-flipped -log P - E.
inline AblationReport run_ablation(
    const RoutesByTarget& candidates, const EnergyModel& energy,
    const std::map<std::string, std::vector<Route>>& references, FpCache& fps,
    int kmax = 5) {
  auto ranked_by = [&](auto score, const std::string& mode) {
    RoutesByTarget out;
    for (const auto& [target, pool] : candidates) {
      struct Scored {
        double s;
        std::string key;
        const Route* route;
      };
      std::vector<Scored> scored;
      for (const Route& r : pool)
        scored.push_back(Scored{score(r, target), route_struct_key(r), &r});
      std::stable_sort(scored.begin(), scored.end(),
                       [](const Scored& x, const Scored& y) {
                         if (x.s != y.s) return x.s < y.s;
                         return x.key < y.key;
                       });
      for (const Scored& s : scored) out[target].push_back(*s.route);
    }
    return evaluate_topk(out, references, kmax, mode);
  };

  AblationReport report;
  report.modes.push_back(ranked_by(
      [&](const Route& r, const std::string&) { return -r.log_prob; },
      "-logP"));
  report.modes.push_back(ranked_by(
      [&](const Route& r, const std::string& t) {
        return -r.log_prob + energy_score(energy, r, t, fps);
      },
      "-logP+E"));
  report.modes.push_back(ranked_by(
      [&](const Route& r, const std::string& t) {
        return energy_score(energy, r, t, fps);
      },
      "E"));
  report.modes.push_back(ranked_by(
      [&](const Route& r, const std::string& t) {
        return -r.log_prob - energy_score(energy, r, t, fps);
      },
      "-logP-E"));
  return report;
}

inline void write_report_files(const nlohmann::json& j, const std::string& csv,
                               const std::string& base_path) {
  {
    std::ofstream out(base_path + ".json");
    if (!out) throw std::runtime_error("cannot write " + base_path + ".json");
    out << j.dump(2) << "\n";
  }
  {
    std::ofstream out(base_path + ".csv");
    if (!out) throw std::runtime_error("cannot write " + base_path + ".csv");
    out << csv;
  }
}

}  // namespace synthplan
