#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthplan/adam.hpp"
#include "synthplan/benchmark.hpp"
#include "synthplan/planners.hpp"
#include "synthplan/reward.hpp"
#include "synthplan/rng.hpp"
#include "synthplan/route.hpp"

namespace synthplan {

// Residual energy model: a 1-hidden-layer tanh MLP over the target
// fingerprint, the starting-material union fingerprint and three scalar
// route descriptors. Interior reactions never enter the features. One model
// is trained per criterion.
struct EnergyModel {
  std::string criterion = "feasibility";
  int nbits = 1024;
  std::vector<std::vector<double>> w1;  // hidden x feature_dim
  std::vector<double> b1;               // hidden
  std::vector<double> w2;               // hidden
  double b2 = 0.0;

  int hidden() const { return static_cast<int>(w1.size()); }
  int feature_dim() const { return 2 * nbits + 3; }

  static EnergyModel zeros(const std::string& criterion, int nbits,
                           int hidden) {
    EnergyModel m;
    m.criterion = criterion;
    m.nbits = nbits;
    m.w1.assign(hidden, std::vector<double>(2 * nbits + 3, 0.0));
    m.b1.assign(hidden, 0.0);
    m.w2.assign(hidden, 0.0);
    m.b2 = 0.0;
    return m;
  }
};

struct PreferencePair {
  std::string target;
  Route winner;
  Route loser;
  double phi_w = 0.0;
  double phi_l = 0.0;
};

inline constexpr double kPhiGapEpsilon = 1e-9;

// Sparse feature view of a route: indices of set bits (target fingerprint in
// [0, nbits), material-union fingerprint shifted by nbits) plus the three
// dense tail entries.
struct RouteFeatures {
  std::vector<int> on_bits;
  double tail[3] = {0.0, 0.0, 0.0};  // tanimoto, |B|/8, depth/8
};

inline RouteFeatures route_features(const Route& route,
                                    const std::string& target, FpCache& fps) {
  RouteFeatures f;
  const int nbits = fps.config().nbits;
  const Fingerprint& target_fp = fps.get(target);
  std::set<std::string> materials = route.leaves();
  Fingerprint union_fp = fingerprint_union_cached(materials, fps);
  for (int bit : target_fp.bits) f.on_bits.push_back(bit);
  for (int bit : union_fp.bits) f.on_bits.push_back(nbits + bit);
  f.tail[0] = tanimoto(target_fp, union_fp);
  f.tail[1] = static_cast<double>(materials.size()) / 8.0;
  f.tail[2] = static_cast<double>(route.depth()) / 8.0;
  return f;
}

inline double energy_from_features(const EnergyModel& model,
                                   const RouteFeatures& f) {
  const int dim = model.feature_dim();
  double e = model.b2;
  for (int j = 0; j < model.hidden(); ++j) {
    const std::vector<double>& row = model.w1[j];
    double a = model.b1[j];
    for (int bit : f.on_bits) a += row[bit];
    a += row[dim - 3] * f.tail[0] + row[dim - 2] * f.tail[1] +
         row[dim - 1] * f.tail[2];
    e += model.w2[j] * std::tanh(a);
  }
  return e;
}

inline double energy_score(const EnergyModel& model, const Route& route,
                           const std::string& target, FpCache& fps) {
  return energy_from_features(model, route_features(route, target, fps));
}

// Gradient container with the model's parameter shapes.
struct EnergyGrad {
  std::vector<std::vector<double>> w1;
  std::vector<double> b1;
  std::vector<double> w2;
  double b2 = 0.0;

  static EnergyGrad zeros_like(const EnergyModel& m) {
    EnergyGrad g;
    g.w1.assign(m.hidden(), std::vector<double>(m.feature_dim(), 0.0));
    g.b1.assign(m.hidden(), 0.0);
    g.w2.assign(m.hidden(), 0.0);
    g.b2 = 0.0;
    return g;
  }
};

namespace detail {

// Accumulates coef * dE/dtheta for one route into `grad`.
inline void accumulate_energy_grad(const EnergyModel& model,
                                   const RouteFeatures& f, double coef,
                                   EnergyGrad& grad) {
  const int dim = model.feature_dim();
  for (int j = 0; j < model.hidden(); ++j) {
    const std::vector<double>& row = model.w1[j];
    double a = model.b1[j];
    for (int bit : f.on_bits) a += row[bit];
    a += row[dim - 3] * f.tail[0] + row[dim - 2] * f.tail[1] +
         row[dim - 1] * f.tail[2];
    double h = std::tanh(a);
    grad.w2[j] += coef * h;
    double da = coef * model.w2[j] * (1.0 - h * h);
    grad.b1[j] += da;
    std::vector<double>& grow = grad.w1[j];
    for (int bit : f.on_bits) grow[bit] += da;
    grow[dim - 3] += da * f.tail[0];
    grow[dim - 2] += da * f.tail[1];
    grow[dim - 1] += da * f.tail[2];
  }
  grad.b2 += coef;
}

struct FeaturePair {
  RouteFeatures winner;
  RouteFeatures loser;
};

// Pairwise preference loss over precomputed features:
// L = -mean log sigmoid(E(loser) - E(winner)) + lambda * ||theta||^2.
inline double bt_loss_and_grad_features(const EnergyModel& model,
                                        const std::vector<FeaturePair>& batch,
                                        double lambda, EnergyGrad& grad) {
  if (batch.empty()) throw std::invalid_argument("empty preference batch");
  double loss = 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const FeaturePair& pair : batch) {
    double ew = energy_from_features(model, pair.winner);
    double el = energy_from_features(model, pair.loser);
    double d = el - ew;
    // -log sigmoid(d), computed stably.
    loss += d > 0 ? std::log1p(std::exp(-d)) : -d + std::log1p(std::exp(d));
    double sig = 1.0 / (1.0 + std::exp(-d));
    double dl_dd = sig - 1.0;  // d(-log sigmoid(d))/dd
    accumulate_energy_grad(model, pair.winner, -dl_dd * scale, grad);
    accumulate_energy_grad(model, pair.loser, dl_dd * scale, grad);
  }
  loss *= scale;
  if (lambda != 0.0) {
    double sq = model.b2 * model.b2;
    grad.b2 += 2.0 * lambda * model.b2;
    for (int j = 0; j < model.hidden(); ++j) {
      sq += model.b1[j] * model.b1[j] + model.w2[j] * model.w2[j];
      grad.b1[j] += 2.0 * lambda * model.b1[j];
      grad.w2[j] += 2.0 * lambda * model.w2[j];
      for (int i = 0; i < model.feature_dim(); ++i) {
        sq += model.w1[j][i] * model.w1[j][i];
        grad.w1[j][i] += 2.0 * lambda * model.w1[j][i];
      }
    }
    loss += lambda * sq;
  }
  return loss;
}

}  // namespace detail

// Exact analytic loss and gradient of the preference objective over a batch
// of pairs.
inline std::pair<double, EnergyGrad> bt_loss_and_grad(
    const EnergyModel& model, const std::vector<PreferencePair>& batch,
    FpCache& fps, double lambda = 1e-4) {
  if (batch.empty()) throw std::invalid_argument("empty preference batch");
  std::vector<detail::FeaturePair> features;
  features.reserve(batch.size());
  for (const PreferencePair& p : batch) {
    features.push_back(
        detail::FeaturePair{route_features(p.winner, p.target, fps),
                            route_features(p.loser, p.target, fps)});
  }
  EnergyGrad grad = EnergyGrad::zeros_like(model);
  double loss =
      detail::bt_loss_and_grad_features(model, features, lambda, grad);
  return {loss, std::move(grad)};
}

struct EnergyTrainConfig {
  double lr = 5e-4;
  int batch_size = 128;
  int epochs = 40;
  double lambda = 1e-4;
  int hidden = 32;
  double init_scale = 0.05;
  std::uint64_t seed = 0;
};

struct EnergyTrainResult {
  EnergyModel model;
  std::vector<double> epoch_losses;
  std::vector<double> holdout_accuracies;
  int best_epoch = -1;
};

// Adam training of the energy model on preference pairs; 10% of the pairs
// are held out by seed and the epoch with the best held-out pair accuracy
// wins.
inline EnergyTrainResult train_energy(const std::vector<PreferencePair>& pairs,
                                      const std::string& criterion,
                                      FpCache& fps,
                                      const EnergyTrainConfig& hyper) {
  if (pairs.empty()) throw std::invalid_argument("train_energy: no pairs");
  const int nbits = fps.config().nbits;
  std::vector<detail::FeaturePair> features;
  features.reserve(pairs.size());
  for (const PreferencePair& p : pairs)
    features.push_back(
        detail::FeaturePair{route_features(p.winner, p.target, fps),
                            route_features(p.loser, p.target, fps)});

  Rng rng(hyper.seed);
  EnergyModel model = EnergyModel::zeros(criterion, nbits, hyper.hidden);
  for (auto& row : model.w1)
    for (double& w : row) w = rng.range(-hyper.init_scale, hyper.init_scale);
  for (double& b : model.b1) b = rng.range(-hyper.init_scale, hyper.init_scale);
  for (double& w : model.w2) w = rng.range(-hyper.init_scale, hyper.init_scale);
  model.b2 = rng.range(-hyper.init_scale, hyper.init_scale);

  std::vector<std::size_t> order(features.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::size_t holdout = features.size() / 10;
  std::vector<std::size_t> held(order.begin(), order.begin() + holdout);
  std::vector<std::size_t> train(order.begin() + holdout, order.end());
  if (train.empty()) std::swap(train, held);

  const std::size_t dim = static_cast<std::size_t>(model.feature_dim());
  const std::size_t param_count =
      static_cast<std::size_t>(hyper.hidden) * (dim + 2) + 1;
  Adam adam(param_count, AdamConfig{hyper.lr, 0.9, 0.999, 1e-8});
  auto flatten = [&](const EnergyModel& m, std::vector<double>& out) {
    out.clear();
    out.reserve(param_count);
    for (const auto& row : m.w1) out.insert(out.end(), row.begin(), row.end());
    out.insert(out.end(), m.b1.begin(), m.b1.end());
    out.insert(out.end(), m.w2.begin(), m.w2.end());
    out.push_back(m.b2);
  };
  auto unflatten = [&](const std::vector<double>& in, EnergyModel& m) {
    std::size_t pos = 0;
    for (auto& row : m.w1) {
      std::copy(in.begin() + pos, in.begin() + pos + dim, row.begin());
      pos += dim;
    }
    std::copy(in.begin() + pos, in.begin() + pos + m.b1.size(), m.b1.begin());
    pos += m.b1.size();
    std::copy(in.begin() + pos, in.begin() + pos + m.w2.size(), m.w2.begin());
    pos += m.w2.size();
    m.b2 = in[pos];
  };

  auto holdout_accuracy = [&](const EnergyModel& m) {
    if (held.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t idx : held) {
      double ew = energy_from_features(m, features[idx].winner);
      double el = energy_from_features(m, features[idx].loser);
      if (ew < el) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(held.size());
  };

  EnergyTrainResult result;
  std::vector<double> params, flat_grad;
  flatten(model, params);
  double best_acc = -1.0;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(train);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < train.size();
         start += hyper.batch_size) {
      std::size_t end = std::min(
          train.size(), start + static_cast<std::size_t>(hyper.batch_size));
      std::vector<detail::FeaturePair> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i)
        batch.push_back(features[train[i]]);
      EnergyGrad grad = EnergyGrad::zeros_like(model);
      epoch_loss += detail::bt_loss_and_grad_features(model, batch,
                                                      hyper.lambda, grad);
      ++batches;
      EnergyModel gm = model;  // reuse shapes for flattening the gradient
      gm.w1 = grad.w1;
      gm.b1 = grad.b1;
      gm.w2 = grad.w2;
      gm.b2 = grad.b2;
      flatten(gm, flat_grad);
      adam.step(params, flat_grad);
      unflatten(params, model);
    }
    result.epoch_losses.push_back(epoch_loss /
                                  static_cast<double>(std::max<std::size_t>(
                                      batches, 1)));
    double acc = holdout_accuracy(model);
    result.holdout_accuracies.push_back(acc);
    if (acc > best_acc) {
      best_acc = acc;
      result.model = model;
      result.best_epoch = epoch;
    }
  }
  if (result.best_epoch < 0) result.model = model;
  return result;
}

// Ranking score of Algorithm-style inference: L = -log P + E. Candidates are
// returned sorted ascending by L; a zero energy model reproduces the base
// strategy's descending log-probability order.
inline std::vector<Route> rerank_routes(const std::vector<Route>& candidates,
                                        const EnergyModel& model,
                                        const std::string& target,
                                        FpCache& fps) {
  if (candidates.empty())
    throw std::invalid_argument("rerank_routes: empty candidate list");
  struct Scored {
    double l;
    std::string key;
    const Route* route;
  };
  std::vector<Scored> scored;
  for (const Route& r : candidates) {
    if (!std::isfinite(r.log_prob))
      throw std::invalid_argument("candidate with non-finite log_prob");
    scored.push_back(Scored{-r.log_prob + energy_score(model, r, target, fps),
                            route_struct_key(r), &r});
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const Scored& x, const Scored& y) {
                     if (x.l != y.l) return x.l < y.l;
                     return x.key < y.key;
                   });
  std::vector<Route> out;
  for (const Scored& s : scored) out.push_back(*s.route);
  return out;
}

// ---- preference-pair construction ----

struct PairBuildConfig {
  int k_samples = 10;
  int max_pairs_per_target = 20;
  SearchLimits search;  // beam used for sampling candidates
};

namespace detail {

// Scores every deduplicated candidate with phi and emits all gap-positive
// ordered pairs, largest gaps first, capped per target.
inline void emit_pairs_for_target(const std::string& target,
                                  const Route& reference,
                                  const std::map<std::string, Route>& dedup,
                                  Criterion criterion, RewardContext& ctx,
                                  int max_pairs_per_target,
                                  std::vector<PreferencePair>& pairs,
                                  long& reference_as_loser) {
  std::set<std::string> ref_materials = reference.leaves();
  std::string reference_key = route_struct_key(reference);

  struct Candidate {
    std::string key;
    const Route* route;
    double phi;
  };
  std::vector<Candidate> candidates;
  std::map<std::string, double> phi_memo;  // leaves+steps key -> phi
  for (const auto& [key, route] : dedup) {
    std::string memo_key;
    for (const std::string& leaf : route.leaves()) {
      memo_key += leaf;
      memo_key += ',';
    }
    memo_key += '#';
    memo_key += std::to_string(route.steps.size());
    auto m = phi_memo.find(memo_key);
    double phi;
    if (m != phi_memo.end()) {
      phi = m->second;
    } else {
      phi = phi_reward(route, target, ref_materials, criterion, ctx);
      phi_memo[memo_key] = phi;
    }
    candidates.push_back(Candidate{key, &route, phi});
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& x, const Candidate& y) {
              if (x.phi != y.phi) return x.phi > y.phi;
              return x.key < y.key;
            });

  struct RawPair {
    double gap;
    const Candidate* winner;
    const Candidate* loser;
  };
  std::vector<RawPair> raw;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    for (std::size_t j = i + 1; j < candidates.size(); ++j)
      if (candidates[i].phi > candidates[j].phi + kPhiGapEpsilon)
        raw.push_back(RawPair{candidates[i].phi - candidates[j].phi,
                              &candidates[i], &candidates[j]});
  std::sort(raw.begin(), raw.end(), [](const RawPair& x, const RawPair& y) {
    if (x.gap != y.gap) return x.gap > y.gap;
    if (x.winner->key != y.winner->key) return x.winner->key < y.winner->key;
    return x.loser->key < y.loser->key;
  });
  if (static_cast<int>(raw.size()) > max_pairs_per_target)
    raw.resize(max_pairs_per_target);
  for (const RawPair& rp : raw) {
    if (rp.loser->key == reference_key) ++reference_as_loser;
    pairs.push_back(PreferencePair{target, *rp.winner->route, *rp.loser->route,
                                   rp.winner->phi, rp.loser->phi});
  }
}

}  // namespace detail

// Candidates per target are the first reference route plus the top
// beam-search samples; all phi-gap-positive ordered pairs are emitted,
// largest gaps first, capped per target.
inline std::vector<PreferencePair> build_preference_pairs(
    const std::vector<std::string>& targets, Proposer& proposer,
    const Benchmark& bench, Criterion criterion, RewardContext& ctx,
    const PairBuildConfig& config, std::ostream* log = nullptr) {
  std::vector<PreferencePair> pairs;
  long reference_as_loser = 0;
  for (const std::string& target : targets) {
    auto ref_it = bench.references.find(target);
    if (ref_it == bench.references.end() || ref_it->second.empty()) continue;
    const Route& reference = ref_it->second.front();

    SearchLimits limits = config.search;
    limits.beam_width = config.k_samples;
    std::vector<Route> sampled =
        beam_search_plan(target, proposer, bench.inventory_set, limits);

    std::map<std::string, Route> dedup;
    dedup.emplace(route_struct_key(reference), reference);
    for (const Route& r : sampled) dedup.emplace(route_struct_key(r), r);
    detail::emit_pairs_for_target(target, reference, dedup, criterion, ctx,
                                  config.max_pairs_per_target, pairs,
                                  reference_as_loser);
  }
  if (log && reference_as_loser > 0)
    *log << "note: reference route appeared as loser in "
         << reference_as_loser << " pairs\n";
  return pairs;
}

// Pair construction from precomputed candidate pools (e.g. a routes file):
// candidates per target are the first reference route plus the pool's top
// k_samples routes. Targets without references are skipped.
inline std::vector<PreferencePair> build_pairs_from_pools(
    const std::map<std::string, std::vector<Route>>& pools,
    const Benchmark& bench, Criterion criterion, RewardContext& ctx,
    int k_samples, int max_pairs_per_target, std::ostream* log = nullptr) {
  if (k_samples < 1)
    throw std::invalid_argument("build_pairs_from_pools: k_samples must be >= 1");
  std::vector<PreferencePair> pairs;
  long reference_as_loser = 0;
  for (const auto& [target, pool] : pools) {
    auto ref_it = bench.references.find(target);
    if (ref_it == bench.references.end() || ref_it->second.empty()) continue;
    const Route& reference = ref_it->second.front();
    std::map<std::string, Route> dedup;
    dedup.emplace(route_struct_key(reference), reference);
    int taken = 0;
    for (const Route& r : pool) {
      if (taken >= k_samples) break;
      dedup.emplace(route_struct_key(r), r);
      ++taken;
    }
    detail::emit_pairs_for_target(target, reference, dedup, criterion, ctx,
                                  max_pairs_per_target, pairs,
                                  reference_as_loser);
  }
  if (log && reference_as_loser > 0)
    *log << "note: reference route appeared as loser in "
         << reference_as_loser << " pairs\n";
  return pairs;
}

// ---- prefs.jsonl and energy checkpoint ----

inline void save_pairs(const std::vector<PreferencePair>& pairs,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const PreferencePair& p : pairs) {
    out << nlohmann::json{{"target", p.target},
                          {"winner", route_to_json(p.winner)},
                          {"loser", route_to_json(p.loser)},
                          {"phi_w", p.phi_w},
                          {"phi_l", p.phi_l}}
               .dump()
        << "\n";
  }
}

inline std::vector<PreferencePair> load_pairs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<PreferencePair> pairs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    PreferencePair p;
    p.target = j.at("target").get<std::string>();
    p.winner = route_from_json(j.at("winner"));
    p.loser = route_from_json(j.at("loser"));
    p.phi_w = j.at("phi_w").get<double>();
    p.phi_l = j.at("phi_l").get<double>();
    pairs.push_back(std::move(p));
  }
  return pairs;
}

inline void save_energy(const EnergyModel& model, const std::string& path) {
  nlohmann::json j{{"criterion", model.criterion}, {"nbits", model.nbits},
                   {"w1", model.w1},              {"b1", model.b1},
                   {"w2", model.w2},              {"b2", model.b2}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump() << "\n";
}

inline EnergyModel load_energy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  nlohmann::json j;
  in >> j;
  EnergyModel model;
  model.criterion = j.at("criterion").get<std::string>();
  model.nbits = j.at("nbits").get<int>();
  model.w1 = j.at("w1").get<std::vector<std::vector<double>>>();
  model.b1 = j.at("b1").get<std::vector<double>>();
  model.w2 = j.at("w2").get<std::vector<double>>();
  model.b2 = j.at("b2").get<double>();
  return model;
}

}  // namespace synthplan
