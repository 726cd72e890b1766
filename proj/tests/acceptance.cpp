// Acceptance suite: one PASS/FAIL line per criterion, exit 0 iff all pass.
//
//  1. canonicalization is relabeling-invariant and round-trips (oracle:
//     exhaustive permutation isomorphism), under 10 s
//  2. every retro outcome of every (rule, benchmark molecule) pair
//     forward-reconstructs the product exactly
//  3. one-step proposal mass sums to 1 +- 1e-9 on 500 molecules
//  4. beam and best-first top-1 equal exhaustive enumeration on 30
//     micro-benchmarks
//  5. pairwise-preference loss: analytic gradient vs central finite
//     differences; ln 2 at zero parameters
//  6. phi(reference route) = 2.0 for every test-split reference; the forward
//     simulator reaches the target with similarity 1.0
//  7. full pipeline: top-1 of -logP+E beats -logP by >= 1 point and the
//     four-way ranking ordering holds; pipeline under 10 minutes
//  8. reranking top-1 delta >= 0 in every depth bucket with >= 50 targets
//  9. the same energy model applied to a second planner's pools gives a
//     non-negative top-1 delta
// 10. two pipeline executions with identical seeds produce byte-identical
//     reports

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "synthplan/pipeline.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace synthplan;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

// ---------- criterion 1 ----------

Outcome criterion1() {
  Outcome out;
  auto t0 = Clock::now();
  Rng rng(1);
  int canon_mismatch = 0, roundtrip_fail = 0;
  const int trials = 1000;
  for (int i = 0; i < trials; ++i) {
    MolGraph m = test_util::random_tree(rng, 8);
    std::string canon = canonical_smiles(m);
    for (int j = 0; j < 5; ++j) {
      auto perm = test_util::random_permutation(rng, m.atom_count());
      if (canonical_smiles(test_util::relabel(m, perm)) != canon)
        ++canon_mismatch;
    }
    if (!test_util::are_isomorphic(parse_smiles(canon), m)) ++roundtrip_fail;
  }
  double secs = seconds_since(t0);
  out.pass = canon_mismatch == 0 && roundtrip_fail == 0 && secs < 10.0;
  std::ostringstream d;
  d << trials << " molecules x5 relabelings, " << canon_mismatch
    << " canonical mismatches, " << roundtrip_fail
    << " round-trip failures, " << secs << " s";
  out.detail = d.str();
  return out;
}

// ---------- criterion 2 ----------

Outcome criterion2(const Benchmark& bench) {
  Outcome out;
  long checked = 0, failures = 0;
  for (const std::string& canon : bench.molecules) {
    MolGraph mol = parse_smiles(canon);
    for (const ReactionRule& rule : bench.rules) {
      for (const ReactantSet& rs : apply_retro_rule(rule, mol)) {
        ++checked;
        auto rebuilt = apply_forward_rule(
            rule, {parse_smiles(rs[0]), parse_smiles(rs[1])});
        if (!rebuilt || canonical_smiles(*rebuilt) != canon) ++failures;
      }
    }
  }
  out.pass = failures == 0 && checked > 0;
  std::ostringstream d;
  d << checked << " retro outcomes over " << bench.molecules.size()
    << " molecules x " << bench.rules.size() << " rules, " << failures
    << " duality failures";
  out.detail = d.str();
  return out;
}

// ---------- criterion 3 ----------

Outcome criterion3(const Benchmark& bench, const OneStepModel& model) {
  Outcome out;
  Rng rng(3);
  std::vector<std::string> shuffled = bench.molecules;
  rng.shuffle(shuffled);
  int checked = 0, violations = 0;
  for (const std::string& canon : shuffled) {
    if (checked >= 500) break;
    auto proposals = propose_all(model, bench.rules, parse_smiles(canon));
    if (proposals.empty()) continue;
    ++checked;
    double total = 0.0;
    for (const Proposal& p : proposals) total += p.probability;
    if (std::abs(total - 1.0) > 1e-9) ++violations;
  }
  out.pass = checked == 500 && violations == 0;
  std::ostringstream d;
  d << checked << " molecules with applicable rules, " << violations
    << " normalization violations";
  out.detail = d.str();
  return out;
}

// ---------- criterion 4 ----------

// Independent exhaustive enumeration of complete routes (unpruned), matching
// the planners' semantics: per-molecule depth from the target, ancestor-path
// cycle guard, shared decompositions close for free.
struct Enumerator {
  Proposer& proposer;
  const std::set<std::string>& inventory;
  int max_depth;
  double best = -std::numeric_limits<double>::infinity();
  long count = 0;

  struct Open {
    std::string mol;
    int depth;
    std::set<std::string> path;
  };

  void run(const std::string& target) {
    recurse({}, {Open{target, 0, {}}}, 0.0);
  }

  void recurse(std::map<std::string, bool> steps, std::vector<Open> open,
               double logp) {
    if (open.empty()) {
      ++count;
      best = std::max(best, logp);
      return;
    }
    // Same selection rule as the planners (largest molecule, then smallest
    // canonical string): the depth a molecule is opened at depends on the
    // processing order, so the oracle must match it exactly.
    std::size_t sel = 0;
    for (std::size_t i = 1; i < open.size(); ++i) {
      int na = proposer.atom_count(open[i].mol);
      int nb = proposer.atom_count(open[sel].mol);
      if (na > nb || (na == nb && open[i].mol < open[sel].mol)) sel = i;
    }
    Open entry = open[sel];
    open.erase(open.begin() + sel);
    if (steps.count(entry.mol)) {
      recurse(std::move(steps), std::move(open), logp);
      return;
    }
    if (entry.depth >= max_depth) return;
    std::set<std::string> path = entry.path;
    path.insert(entry.mol);
    for (const Proposal& prop : proposer.valid(entry.mol)) {
      bool cyclic = false;
      for (const std::string& r : prop.reactants)
        if (path.count(r)) cyclic = true;
      if (cyclic) continue;
      auto child_steps = steps;
      child_steps[entry.mol] = true;
      auto child_open = open;
      std::set<std::string> opened;
      for (const std::string& r : prop.reactants) {
        if (inventory.count(r) || child_steps.count(r) || opened.count(r))
          continue;
        opened.insert(r);
        child_open.push_back(Open{r, entry.depth + 1, path});
      }
      recurse(std::move(child_steps), std::move(child_open),
              logp + std::log(prop.probability));
    }
  }
};

Outcome criterion4() {
  Outcome out;
  BenchmarkConfig micro;
  micro.num_rules = 5;
  micro.inventory_size = 20;
  micro.molecule_budget = 200;
  micro.max_depth = 3;
  micro.max_atoms = 12;
  int compared = 0, beam_mismatch = 0, bestfirst_mismatch = 0;
  for (int b = 0; b < 30; ++b) {
    Benchmark bench = generate_benchmark(micro, 200 + b);
    OneStepModel model = OneStepModel::zero_init(bench.rules, FpConfig{});
    Proposer proposer(model, bench.rules);
    std::vector<std::string> targets = bench.train;
    targets.insert(targets.end(), bench.val.begin(), bench.val.end());
    targets.insert(targets.end(), bench.test.begin(), bench.test.end());
    int used = 0;
    for (const std::string& target : targets) {
      if (used >= 4) break;
      Enumerator oracle{proposer, bench.inventory_set, 3};
      oracle.run(target);
      SearchLimits limits;
      limits.max_depth = 3;
      limits.proposals_per_node = 1000;
      limits.beam_width = 100000;  // effectively exhaustive, no pruning
      limits.expansions_budget = 1000000;    // ample
      auto beam =
          beam_search_plan(target, proposer, bench.inventory_set, limits);
      auto zero = [](const std::string&) { return 0.0; };
      auto bestfirst =
          retrostar_plan(target, proposer, bench.inventory_set, zero, limits);
      if (oracle.count == 0) {
        if (!beam.empty()) ++beam_mismatch;
        if (!bestfirst.empty()) ++bestfirst_mismatch;
        continue;
      }
      ++used;
      ++compared;
      if (beam.empty() || std::abs(beam[0].log_prob - oracle.best) > 1e-9)
        ++beam_mismatch;
      if (bestfirst.empty() ||
          std::abs(bestfirst[0].log_prob - oracle.best) > 1e-9)
        ++bestfirst_mismatch;
    }
  }
  out.pass = compared >= 30 && beam_mismatch == 0 && bestfirst_mismatch == 0;
  std::ostringstream d;
  d << compared << " targets across 30 micro-benchmarks, " << beam_mismatch
    << " beam and " << bestfirst_mismatch
    << " best-first deviations from the exhaustive optimum";
  out.detail = d.str();
  return out;
}

// ---------- criterion 5 ----------

double& param_at(EnergyModel& m, std::size_t flat) {
  const std::size_t dim = static_cast<std::size_t>(m.feature_dim());
  const std::size_t h = static_cast<std::size_t>(m.hidden());
  if (flat < h * dim) return m.w1[flat / dim][flat % dim];
  flat -= h * dim;
  if (flat < h) return m.b1[flat];
  flat -= h;
  if (flat < h) return m.w2[flat];
  return m.b2;
}

double grad_at(const EnergyGrad& g, std::size_t flat, std::size_t dim) {
  const std::size_t h = g.b1.size();
  if (flat < h * dim) return g.w1[flat / dim][flat % dim];
  flat -= h * dim;
  if (flat < h) return g.b1[flat];
  flat -= h;
  if (flat < h) return g.w2[flat];
  return g.b2;
}

Outcome criterion5() {
  Outcome out;
  const int nbits = 64, hidden = 4;
  FpCache fps(FpConfig{2, nbits});
  Rng rng(5);

  // Synthetic single-step routes over a small molecule vocabulary.
  std::vector<std::string> vocab{"CO",  "CN",  "CS",  "CF",  "CCl",
                                 "CBr", "CI",  "C=O", "C=N", "CC"};
  for (std::string& v : vocab) v = canonicalize(v);
  auto make_route = [&](const std::string& target) {
    Route r;
    r.target = target;
    r.log_prob = -1.0;
    ReactantSet rs{vocab[rng.below(vocab.size())],
                   vocab[rng.below(vocab.size())]};
    std::sort(rs.begin(), rs.end());
    r.steps.push_back(RouteStep{target, rs, "r0", -1.0});
    return r;
  };
  auto make_pairs = [&](int n) {
    std::vector<PreferencePair> pairs;
    for (int i = 0; i < n; ++i) {
      std::string target = canonicalize("CC" + vocab[rng.below(vocab.size())]);
      pairs.push_back(PreferencePair{target, make_route(target),
                                     make_route(target), 1.0, 0.0});
    }
    return pairs;
  };

  // Loss at zero parameters with lambda = 0 is exactly ln 2.
  EnergyModel zero = EnergyModel::zeros("feasibility", nbits, hidden);
  auto [zero_loss, zero_grad] = bt_loss_and_grad(zero, make_pairs(8), fps, 0.0);
  bool ln2_ok = std::abs(zero_loss - std::log(2.0)) <= 1e-9;

  const std::size_t dim = static_cast<std::size_t>(zero.feature_dim());
  const std::size_t nparams = static_cast<std::size_t>(hidden) * (dim + 2) + 1;
  const double lambda = 1e-3, step = 1e-5;
  double max_rel_err = 0.0;
  for (int draw = 0; draw < 50; ++draw) {
    EnergyModel model = EnergyModel::zeros("feasibility", nbits, hidden);
    for (std::size_t p = 0; p < nparams; ++p)
      param_at(model, p) = rng.range(-0.5, 0.5);
    auto pairs = make_pairs(6);
    auto [loss, grad] = bt_loss_and_grad(model, pairs, fps, lambda);
    std::size_t p = rng.below(nparams);
    double saved = param_at(model, p);
    param_at(model, p) = saved + step;
    double plus = bt_loss_and_grad(model, pairs, fps, lambda).first;
    param_at(model, p) = saved - step;
    double minus = bt_loss_and_grad(model, pairs, fps, lambda).first;
    param_at(model, p) = saved;
    double numeric = (plus - minus) / (2.0 * step);
    double analytic = grad_at(grad, p, dim);
    double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
    max_rel_err = std::max(max_rel_err, std::abs(numeric - analytic) / denom);
  }
  out.pass = ln2_ok && max_rel_err < 1e-5;
  std::ostringstream d;
  d << "zero-parameter loss " << zero_loss << " (ln 2 = " << std::log(2.0)
    << "), max gradient relative error " << max_rel_err << " over 50 draws";
  out.detail = d.str();
  return out;
}

// ---------- criterion 6 ----------

Outcome criterion6(const Benchmark& bench) {
  Outcome out;
  FpCache fps((FpConfig()));
  RewardContext ctx;
  ctx.rules = &bench.rules;
  ctx.fps = &fps;
  long routes_checked = 0, phi_fail = 0, oracle_fail = 0;
  for (const std::string& target : bench.test) {
    auto it = bench.references.find(target);
    if (it == bench.references.end()) continue;
    for (const Route& ref : it->second) {
      ++routes_checked;
      std::set<std::string> leaves = ref.leaves();
      std::vector<std::string> mats(leaves.begin(), leaves.end());
      OracleResult res =
          forward_oracle(mats, target, bench.rules, ctx.oracle, fps);
      if (res.molecule != target || res.similarity != 1.0) ++oracle_fail;
      double phi =
          phi_reward(ref, target, leaves, Criterion::Feasibility, ctx);
      if (phi != 2.0) ++phi_fail;
    }
  }
  out.pass = routes_checked > 0 && phi_fail == 0 && oracle_fail == 0;
  std::ostringstream d;
  d << routes_checked << " test-split reference routes, " << phi_fail
    << " with phi != 2.0, " << oracle_fail
    << " where the forward simulation missed the target";
  out.detail = d.str();
  return out;
}

// ---------- pipeline (criteria 7-10) ----------

struct PipelineRun {
  fs::path dir;
  double seconds = 0.0;
  AblationReport ablation;
  EvalReport rs_base, rs_reranked;
};

PipelineRun run_pipeline(const fs::path& dir, int threads) {
  fs::create_directories(dir);
  PipelineRun run;
  run.dir = dir;
  auto t0 = Clock::now();

  Benchmark bench = generate_benchmark(BenchmarkConfig{}, 17);
  save_benchmark(bench, (dir / "bench").string());

  OneStepTrainConfig onestep_hyper;
  onestep_hyper.seed = 17;
  OneStepModel model =
      train_onestep(bench.reactions, bench.rules, FpConfig{}, onestep_hyper)
          .model;
  save_onestep(model, (dir / "onestep.json").string());

  SearchLimits limits;  // beam width 10, depth 6
  RoutesByTarget routes_train = plan_routes(
      bench, model, bench.train, PlanAlgo::Beam, limits, 10, threads);
  save_routes_jsonl(routes_train, (dir / "routes_train.jsonl").string());
  RoutesByTarget routes_test = plan_routes(
      bench, model, bench.test, PlanAlgo::Beam, limits, 10, threads);
  save_routes_jsonl(routes_test, (dir / "routes_test.jsonl").string());

  std::vector<PreferencePair> pairs = build_pairs_parallel(
      routes_train, bench, Criterion::Feasibility, OracleLimits{}, FpConfig{},
      10, PairBuildConfig{}.max_pairs_per_target, threads);
  save_pairs(pairs, (dir / "prefs.jsonl").string());

  EnergyTrainConfig energy_hyper;
  energy_hyper.seed = 17;
  FpCache fps((FpConfig()));
  EnergyModel energy =
      train_energy(pairs, "feasibility", fps, energy_hyper).model;
  save_energy(energy, (dir / "energy.json").string());

  RoutesByTarget reranked;
  for (const auto& [target, pool] : routes_test)
    reranked[target] = rerank_routes(pool, energy, target, fps);
  save_routes_jsonl(reranked, (dir / "routes_test_reranked.jsonl").string());

  EvalReport base_report =
      evaluate_topk(routes_test, bench.references, 5, "-logP");
  write_report_files(base_report.to_json(), base_report.to_csv(),
                     (dir / "eval_base").string());
  EvalReport rr_report =
      evaluate_topk(reranked, bench.references, 5, "-logP+E");
  write_report_files(rr_report.to_json(), rr_report.to_csv(),
                     (dir / "eval_reranked").string());
  run.ablation = run_ablation(routes_test, energy, bench.references, fps);
  write_report_files(run.ablation.to_json(), run.ablation.to_csv(),
                     (dir / "ablation").string());
  run.seconds = seconds_since(t0);

  // Second planner for the plug-and-play check: best-first with the
  // benchmark-derived value oracle, same frozen energy model.
  RoutesByTarget routes_rs = plan_routes(
      bench, model, bench.test, PlanAlgo::Retrostar, limits, 10, threads);
  save_routes_jsonl(routes_rs, (dir / "routes_test_retrostar.jsonl").string());
  RoutesByTarget rs_reranked;
  for (const auto& [target, pool] : routes_rs)
    rs_reranked[target] = rerank_routes(pool, energy, target, fps);
  run.rs_base = evaluate_topk(routes_rs, bench.references, 5, "-logP");
  write_report_files(run.rs_base.to_json(), run.rs_base.to_csv(),
                     (dir / "eval_retrostar_base").string());
  run.rs_reranked = evaluate_topk(rs_reranked, bench.references, 5, "-logP+E");
  write_report_files(run.rs_reranked.to_json(), run.rs_reranked.to_csv(),
                     (dir / "eval_retrostar_reranked").string());
  return run;
}

Outcome criterion7(const PipelineRun& run) {
  Outcome out;
  double a = run.ablation.modes[0].topk_accuracy[0];
  double b = run.ablation.modes[1].topk_accuracy[0];
  double c = run.ablation.modes[2].topk_accuracy[0];
  double d = run.ablation.modes[3].topk_accuracy[0];
  bool gain = b >= a + 1.0;
  bool ordering = b > a && a > c && c > d;
  out.pass = gain && ordering && run.seconds < 600.0;
  std::ostringstream s;
  s << "top-1: -logP+E " << b << ", -logP " << a << ", E " << c
    << ", -logP-E " << d << "; pipeline " << run.seconds << " s";
  out.detail = s.str();
  return out;
}

Outcome criterion8(const PipelineRun& run) {
  Outcome out;
  const EvalReport& base = run.ablation.modes[0];
  const EvalReport& rr = run.ablation.modes[1];
  std::ostringstream s;
  int buckets = 0;
  for (const auto& [depth, bucket] : base.depth_top1) {
    if (bucket.count < 50) continue;
    ++buckets;
    auto it = rr.depth_top1.find(depth);
    double delta =
        (it == rr.depth_top1.end() ? 0.0 : it->second.accuracy()) -
        bucket.accuracy();
    s << "depth " << depth << " (" << bucket.count << " targets): "
      << (delta >= 0 ? "+" : "") << delta << "; ";
    if (delta < 0.0) out.pass = false;
  }
  if (buckets == 0) out.pass = false;
  out.detail = s.str() + std::to_string(buckets) + " buckets with >= 50 targets";
  return out;
}

Outcome criterion9(const PipelineRun& run) {
  Outcome out;
  double base = run.rs_base.topk_accuracy[0];
  double rr = run.rs_reranked.topk_accuracy[0];
  out.pass = rr >= base;
  std::ostringstream s;
  s << "best-first planner top-1: base " << base << ", reranked " << rr
    << " (delta " << rr - base << ")";
  out.detail = s.str();
  return out;
}

Outcome criterion10(const PipelineRun& a, const PipelineRun& b) {
  Outcome out;
  std::vector<std::string> reports{
      "eval_base",           "eval_reranked",
      "ablation",            "eval_retrostar_base",
      "eval_retrostar_reranked"};
  std::ostringstream s;
  int compared = 0;
  for (const std::string& name : reports) {
    for (const char* ext : {".json", ".csv"}) {
      std::ifstream fa(a.dir / (name + ext), std::ios::binary);
      std::ifstream fb(b.dir / (name + ext), std::ios::binary);
      std::stringstream ca, cb;
      ca << fa.rdbuf();
      cb << fb.rdbuf();
      ++compared;
      if (!fa || !fb || ca.str() != cb.str() || ca.str().empty()) {
        out.pass = false;
        s << name << ext << " differs; ";
      }
    }
  }
  out.detail = std::to_string(compared) + " report files compared byte-wise" +
               (out.pass ? "" : "; " + s.str());
  return out;
}

}  // namespace

int main() {
  int threads = default_threads();
  std::vector<std::pair<int, Outcome>> results;
  auto report = [&](int id, const Outcome& o) {
    results.emplace_back(id, o);
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL")
              << " - " << o.detail << std::endl;
  };

  report(1, criterion1());

  fs::path work = fs::temp_directory_path() / "synthplan_acceptance";
  fs::remove_all(work);
  PipelineRun run_a = run_pipeline(work / "run_a", threads);
  Benchmark bench = load_benchmark((run_a.dir / "bench").string());
  OneStepModel model = load_onestep((run_a.dir / "onestep.json").string());

  report(2, criterion2(bench));
  report(3, criterion3(bench, model));
  report(4, criterion4());
  report(5, criterion5());
  report(6, criterion6(bench));
  report(7, criterion7(run_a));
  report(8, criterion8(run_a));
  report(9, criterion9(run_a));
  PipelineRun run_b = run_pipeline(work / "run_b", threads);
  report(10, criterion10(run_a, run_b));

  bool all = true;
  for (const auto& [id, o] : results) all = all && o.pass;
  std::cout << (all ? "ALL CRITERIA PASS" : "SOME CRITERIA FAIL") << std::endl;
  return all ? 0 : 1;
}
