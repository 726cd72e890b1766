#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "synthplan/adam.hpp"
#include "synthplan/benchmark.hpp"
#include "synthplan/fingerprint.hpp"
#include "synthplan/oracle.hpp"
#include "synthplan/reaction.hpp"
#include "synthplan/rng.hpp"

namespace synthplan {

// Template-style one-step retrosynthesis model: a linear scorer over product
// fingerprints with a softmax restricted to the rules applicable to the
// product. Rule order matches the rule file.
struct OneStepModel {
  int radius = 2;
  int nbits = 1024;
  std::vector<std::string> rule_ids;
  std::vector<std::vector<double>> weights;  // num_rules x nbits
  std::vector<double> bias;                  // num_rules

  static OneStepModel zero_init(const std::vector<ReactionRule>& rules,
                                FpConfig fp) {
    OneStepModel m;
    m.radius = fp.radius;
    m.nbits = fp.nbits;
    for (const ReactionRule& r : rules) m.rule_ids.push_back(r.id);
    m.weights.assign(rules.size(), std::vector<double>(fp.nbits, 0.0));
    m.bias.assign(rules.size(), 0.0);
    return m;
  }
};

struct OneStepTrainConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  int batch_size = 64;
  int epochs = 30;
  std::uint64_t seed = 0;
};

// One proposed retro outcome: reactant set, rule and its share of the
// softmax mass (a rule's probability splits uniformly over its outcomes).
struct Proposal {
  ReactantSet reactants;
  std::string rule_id;
  double probability = 0.0;
};

namespace detail {

inline std::string reactant_set_key(const ReactantSet& rs) {
  std::string key;
  for (const std::string& m : rs) {
    key += m;
    key += ',';
  }
  return key;
}

inline double rule_logit(const OneStepModel& model, int rule_idx,
                         const Fingerprint& fp) {
  double z = model.bias[rule_idx];
  const std::vector<double>& w = model.weights[rule_idx];
  for (int bit : fp.bits) z += w[bit];
  return z;
}

}  // namespace detail

// Every outcome with its probability, sorted by probability descending with
// lexicographic (reactant set, rule id) tie-break. Empty when no rule
// applies.
inline std::vector<Proposal> propose_all(const OneStepModel& model,
                                         const std::vector<ReactionRule>& rules,
                                         const MolGraph& product) {
  Fingerprint fp = morgan_fingerprint(product, model.radius, model.nbits);
  struct Applicable {
    int rule_idx;
    std::vector<ReactantSet> outcomes;
    double logit;
  };
  std::vector<Applicable> applicable;
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rules.size(); ++i) {
    std::vector<ReactantSet> outcomes = apply_retro_rule(rules[i], product);
    if (outcomes.empty()) continue;
    double z = detail::rule_logit(model, static_cast<int>(i), fp);
    max_logit = std::max(max_logit, z);
    applicable.push_back(
        Applicable{static_cast<int>(i), std::move(outcomes), z});
  }
  if (applicable.empty()) return {};
  double denom = 0.0;
  for (const Applicable& a : applicable) denom += std::exp(a.logit - max_logit);
  std::vector<Proposal> out;
  for (const Applicable& a : applicable) {
    double p_rule = std::exp(a.logit - max_logit) / denom;
    double share = p_rule / static_cast<double>(a.outcomes.size());
    for (const ReactantSet& rs : a.outcomes)
      out.push_back(Proposal{rs, rules[a.rule_idx].id, share});
  }
  std::sort(out.begin(), out.end(), [](const Proposal& x, const Proposal& y) {
    if (x.probability != y.probability) return x.probability > y.probability;
    std::string kx = detail::reactant_set_key(x.reactants);
    std::string ky = detail::reactant_set_key(y.reactants);
    if (kx != ky) return kx < ky;
    return x.rule_id < y.rule_id;
  });
  return out;
}

inline std::vector<Proposal> propose_topk(const OneStepModel& model,
                                          const std::vector<ReactionRule>& rules,
                                          const MolGraph& product, int k) {
  if (k < 1) throw std::invalid_argument("propose_topk: k must be >= 1");
  std::vector<Proposal> all = propose_all(model, rules, product);
  if (static_cast<int>(all.size()) > k) all.resize(k);
  return all;
}

// Log probability the model assigns to producing `reactants` from `product`;
// -inf when no rule yields that set. Mass from several rules producing the
// same set aggregates.
inline double step_log_prob(const OneStepModel& model,
                            const std::vector<ReactionRule>& rules,
                            const MolGraph& product,
                            const ReactantSet& reactants) {
  ReactantSet sorted = reactants;
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  for (const Proposal& p : propose_all(model, rules, product)) {
    if (p.reactants == sorted) total += p.probability;
  }
  if (total <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(total);
}

struct OneStepTrainResult {
  OneStepModel model;
  std::vector<double> epoch_losses;  // mean cross-entropy per epoch
};

// Cross-entropy of the true rule among the rules applicable to each product,
// minimized with mini-batch Adam under seed-fixed shuffling. Returns the
// final-epoch parameters.
inline OneStepTrainResult train_onestep(
    const std::vector<ReactionRecord>& reactions,
    const std::vector<ReactionRule>& rules, FpConfig fp,
    const OneStepTrainConfig& hyper) {
  if (reactions.empty())
    throw std::invalid_argument("train_onestep: no reactions");
  std::unordered_map<std::string, int> rule_index;
  for (std::size_t i = 0; i < rules.size(); ++i)
    rule_index[rules[i].id] = static_cast<int>(i);

  struct Sample {
    std::vector<int> bits;
    std::vector<int> applicable;  // rule indices
    int label_pos;                // position of the true rule in `applicable`
  };
  std::vector<Sample> samples;
  std::unordered_map<std::string, std::pair<std::vector<int>, std::vector<int>>>
      product_cache;  // canon -> (bits, applicable)
  for (const ReactionRecord& rec : reactions) {
    auto it = rule_index.find(rec.rule_id);
    if (it == rule_index.end())
      throw std::invalid_argument("unknown rule in record: " + rec.rule_id);
    auto cached = product_cache.find(rec.product);
    if (cached == product_cache.end()) {
      MolGraph mol = parse_smiles(rec.product);
      Fingerprint f = morgan_fingerprint(mol, fp.radius, fp.nbits);
      std::vector<int> bits(f.bits.begin(), f.bits.end());
      std::vector<int> applicable;
      for (std::size_t i = 0; i < rules.size(); ++i)
        if (!apply_retro_rule(rules[i], mol).empty())
          applicable.push_back(static_cast<int>(i));
      cached = product_cache
                   .emplace(rec.product,
                            std::make_pair(std::move(bits), std::move(applicable)))
                   .first;
    }
    const auto& [bits, applicable] = cached->second;
    auto pos = std::find(applicable.begin(), applicable.end(), it->second);
    if (pos == applicable.end())
      throw std::invalid_argument("record rule " + rec.rule_id +
                                  " is not applicable to product " +
                                  rec.product);
    samples.push_back(Sample{bits, applicable,
                             static_cast<int>(pos - applicable.begin())});
  }

  const std::size_t num_rules = rules.size();
  const std::size_t dim = num_rules * static_cast<std::size_t>(fp.nbits);
  std::vector<double> params(dim + num_rules, 0.0);  // weights then bias
  Adam adam(params.size(),
            AdamConfig{hyper.lr, hyper.beta1, hyper.beta2, 1e-8});
  Rng rng(hyper.seed);
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  OneStepTrainResult result;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += hyper.batch_size) {
      std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(hyper.batch_size));
      std::vector<double> grad(params.size(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t oi = start; oi < end; ++oi) {
        const Sample& s = samples[order[oi]];
        std::vector<double> logits(s.applicable.size());
        double max_logit = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < s.applicable.size(); ++j) {
          int r = s.applicable[j];
          double z = params[dim + r];
          const double* w = params.data() + static_cast<std::size_t>(r) * fp.nbits;
          for (int bit : s.bits) z += w[bit];
          logits[j] = z;
          max_logit = std::max(max_logit, z);
        }
        double denom = 0.0;
        for (double z : logits) denom += std::exp(z - max_logit);
        double logp =
            logits[s.label_pos] - max_logit - std::log(denom);
        batch_loss -= logp;
        for (std::size_t j = 0; j < s.applicable.size(); ++j) {
          int r = s.applicable[j];
          double coef = std::exp(logits[j] - max_logit) / denom -
                        (static_cast<int>(j) == s.label_pos ? 1.0 : 0.0);
          grad[dim + r] += coef;
          double* gw = grad.data() + static_cast<std::size_t>(r) * fp.nbits;
          for (int bit : s.bits) gw[bit] += coef;
        }
      }
      double scale = 1.0 / static_cast<double>(end - start);
      for (double& g : grad) g *= scale;
      adam.step(params, grad);
      epoch_loss += batch_loss;
    }
    result.epoch_losses.push_back(epoch_loss /
                                  static_cast<double>(samples.size()));
  }

  OneStepModel model = OneStepModel::zero_init(rules, fp);
  for (std::size_t r = 0; r < num_rules; ++r) {
    for (int b = 0; b < fp.nbits; ++b)
      model.weights[r][b] = params[r * fp.nbits + b];
    model.bias[r] = params[dim + r];
  }
  result.model = std::move(model);
  return result;
}

// ---- checkpoint JSON ----

inline void save_onestep(const OneStepModel& model, const std::string& path) {
  nlohmann::json j{{"radius", model.radius},
                   {"nbits", model.nbits},
                   {"rule_ids", model.rule_ids},
                   {"weights", model.weights},
                   {"bias", model.bias}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump() << "\n";
}

inline OneStepModel load_onestep(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  nlohmann::json j;
  in >> j;
  OneStepModel model;
  model.radius = j.at("radius").get<int>();
  model.nbits = j.at("nbits").get<int>();
  model.rule_ids = j.at("rule_ids").get<std::vector<std::string>>();
  model.weights = j.at("weights").get<std::vector<std::vector<double>>>();
  model.bias = j.at("bias").get<std::vector<double>>();
  return model;
}

}  // namespace synthplan
