// Command-line front end for the retrosynthesis planning pipeline. Stages
// communicate through files so each can be re-run independently:
//   gen-benchmark -> benchmark dir
//   train-onestep -> onestep model JSON
//   plan          -> routes.jsonl (ranked candidate routes per target)
//   build-prefs   -> prefs.jsonl (preference pairs)
//   train-crebm   -> energy model JSON
//   rerank        -> routes.jsonl reordered by -logP + E
//   evaluate      -> report .json/.csv
//   ablate        -> four-way ranking comparison report .json/.csv
// Exit code 0 on success, 2 on any validation failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "synthplan/pipeline.hpp"

namespace {

using namespace synthplan;

BenchmarkConfig read_config(const std::string& path) {
  if (path.empty()) return BenchmarkConfig{};
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config: " + path);
  nlohmann::json j;
  in >> j;
  return config_from_json(j);
}

FpConfig model_fp(const OneStepModel& model) {
  return FpConfig{model.radius, model.nbits};
}

std::vector<std::string> split_targets(const Benchmark& bench,
                                       const std::string& split) {
  if (split == "train") return bench.train;
  if (split == "val") return bench.val;
  if (split == "test") return bench.test;
  throw std::invalid_argument("unknown split: " + split);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Retrosynthetic planning over a rule-based chemistry world"};
  app.require_subcommand(1);
  int threads = default_threads();
  app.add_option("--threads", threads,
                 "worker threads (results are thread-count independent)");

  // gen-benchmark
  std::string gb_config, gb_out;
  std::uint64_t gb_seed = 0;
  auto* gen = app.add_subcommand("gen-benchmark",
                                 "generate a seeded reaction-world benchmark");
  gen->add_option("--config", gb_config, "benchmark config JSON");
  gen->add_option("--seed", gb_seed, "RNG seed")->required();
  gen->add_option("--out", gb_out, "output benchmark directory")->required();

  // train-onestep
  std::string to_bench, to_out;
  std::uint64_t to_seed = 0;
  auto* tos = app.add_subcommand("train-onestep",
                                 "train the one-step retrosynthesis model");
  tos->add_option("--benchmark", to_bench, "benchmark directory")->required();
  tos->add_option("--seed", to_seed, "RNG seed")->required();
  tos->add_option("--out", to_out, "model JSON path")->required();

  // plan
  std::string pl_model, pl_bench, pl_split = "test", pl_algo = "beam", pl_out;
  int pl_beam_width = 10, pl_k = 10;
  auto* plan = app.add_subcommand("plan", "plan routes for a benchmark split");
  plan->add_option("--model", pl_model, "one-step model JSON")->required();
  plan->add_option("--benchmark", pl_bench, "benchmark directory")->required();
  plan->add_option("--split", pl_split, "train | val | test");
  plan->add_option("--algo", pl_algo, "greedy | beam | retrostar");
  plan->add_option("--beam-width", pl_beam_width, "beam width");
  plan->add_option("--k", pl_k, "routes kept per target");
  plan->add_option("--out", pl_out, "routes.jsonl path")->required();

  // build-prefs
  std::string bp_routes, bp_bench, bp_criterion = "feasibility", bp_out;
  int bp_k_samples = 10;
  auto* prefs = app.add_subcommand(
      "build-prefs", "build preference pairs from planned routes");
  prefs->add_option("--routes", bp_routes, "routes.jsonl")->required();
  prefs->add_option("--benchmark", bp_bench, "benchmark directory")->required();
  prefs->add_option("--criterion", bp_criterion,
                    "feasibility | material_similarity | forward_feasibility | "
                    "shortest_route");
  prefs->add_option("--k-samples", bp_k_samples, "candidate routes per target");
  prefs->add_option("--out", bp_out, "prefs.jsonl path")->required();

  // train-crebm
  std::string tc_prefs, tc_out;
  std::uint64_t tc_seed = 0;
  auto* tc = app.add_subcommand("train-crebm",
                                "train the residual energy reranker");
  tc->add_option("--prefs", tc_prefs, "prefs.jsonl")->required();
  tc->add_option("--seed", tc_seed, "RNG seed")->required();
  tc->add_option("--out", tc_out, "energy model JSON path")->required();

  // rerank
  std::string rr_routes, rr_energy, rr_out;
  auto* rr = app.add_subcommand("rerank", "reorder routes by -logP + E");
  rr->add_option("--routes", rr_routes, "routes.jsonl")->required();
  rr->add_option("--energy", rr_energy, "energy model JSON")->required();
  rr->add_option("--out", rr_out, "reranked routes.jsonl path")->required();

  // evaluate
  std::string ev_routes, ev_bench, ev_report;
  int ev_kmax = 5;
  auto* ev = app.add_subcommand("evaluate",
                                "top-k exact-match evaluation of a routes file");
  ev->add_option("--routes", ev_routes, "routes.jsonl")->required();
  ev->add_option("--benchmark", ev_bench, "benchmark directory")->required();
  ev->add_option("--kmax", ev_kmax, "largest k in the top-k table");
  ev->add_option("--report", ev_report, "report base path (.json/.csv added)")
      ->required();

  // ablate
  std::string ab_routes, ab_energy, ab_bench, ab_report;
  auto* ab = app.add_subcommand(
      "ablate", "compare -logP, -logP+E, E and -logP-E rankings");
  ab->add_option("--routes", ab_routes, "routes.jsonl")->required();
  ab->add_option("--energy", ab_energy, "energy model JSON")->required();
  ab->add_option("--benchmark", ab_bench, "benchmark directory")->required();
  ab->add_option("--report", ab_report, "report base path (.json/.csv added)")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) {
      Benchmark bench = generate_benchmark(read_config(gb_config), gb_seed);
      save_benchmark(bench, gb_out);
      std::cout << "benchmark: " << bench.molecules.size() << " molecules, "
                << bench.reactions.size() << " reactions, targets "
                << bench.train.size() << "/" << bench.val.size() << "/"
                << bench.test.size() << " -> " << gb_out << "\n";
    } else if (tos->parsed()) {
      Benchmark bench = load_benchmark(to_bench);
      OneStepTrainConfig hyper;
      hyper.seed = to_seed;
      auto result =
          train_onestep(bench.reactions, bench.rules, FpConfig{}, hyper);
      save_onestep(result.model, to_out);
      std::cout << "one-step model: loss " << result.epoch_losses.front()
                << " -> " << result.epoch_losses.back() << " over "
                << result.epoch_losses.size() << " epochs -> " << to_out
                << "\n";
    } else if (plan->parsed()) {
      Benchmark bench = load_benchmark(pl_bench);
      OneStepModel model = load_onestep(pl_model);
      SearchLimits limits;
      limits.beam_width = pl_beam_width;
      std::vector<std::string> targets = split_targets(bench, pl_split);
      RoutesByTarget routes =
          plan_routes(bench, model, targets, plan_algo_from_string(pl_algo),
                      limits, pl_k, threads);
      save_routes_jsonl(routes, pl_out);
      std::cout << "planned " << routes.size() << "/" << targets.size()
                << " targets (" << pl_algo << ", split " << pl_split
                << ") -> " << pl_out << "\n";
    } else if (prefs->parsed()) {
      Benchmark bench = load_benchmark(bp_bench);
      RoutesByTarget pools = load_routes_jsonl(bp_routes);
      PairBuildConfig pc;
      std::vector<PreferencePair> pairs = build_pairs_parallel(
          pools, bench, criterion_from_string(bp_criterion), OracleLimits{},
          FpConfig{}, bp_k_samples, pc.max_pairs_per_target, threads);
      save_pairs(pairs, bp_out);
      std::cout << "built " << pairs.size() << " preference pairs ("
                << bp_criterion << ") -> " << bp_out << "\n";
    } else if (tc->parsed()) {
      std::vector<PreferencePair> pairs = load_pairs(tc_prefs);
      EnergyTrainConfig hyper;
      hyper.seed = tc_seed;
      FpCache fps((FpConfig()));
      auto result = train_energy(pairs, "feasibility", fps, hyper);
      save_energy(result.model, tc_out);
      std::cout << "energy model: best epoch " << result.best_epoch
                << ", holdout accuracy "
                << result.holdout_accuracies[result.best_epoch] << " -> "
                << tc_out << "\n";
    } else if (rr->parsed()) {
      RoutesByTarget pools = load_routes_jsonl(rr_routes);
      EnergyModel energy = load_energy(rr_energy);
      FpCache fps(FpConfig{2, energy.nbits});
      RoutesByTarget out;
      for (const auto& [target, pool] : pools)
        out[target] = rerank_routes(pool, energy, target, fps);
      save_routes_jsonl(out, rr_out);
      std::cout << "reranked " << out.size() << " targets -> " << rr_out
                << "\n";
    } else if (ev->parsed()) {
      Benchmark bench = load_benchmark(ev_bench);
      RoutesByTarget routes = load_routes_jsonl(ev_routes);
      EvalReport report =
          evaluate_topk(routes, bench.references, ev_kmax, "ranked");
      write_report_files(report.to_json(), report.to_csv(), ev_report);
      std::cout << "top-1 " << report.topk_accuracy.front() << " over "
                << report.records.size() << " targets -> " << ev_report
                << ".{json,csv}\n";
    } else if (ab->parsed()) {
      Benchmark bench = load_benchmark(ab_bench);
      RoutesByTarget routes = load_routes_jsonl(ab_routes);
      EnergyModel energy = load_energy(ab_energy);
      FpCache fps(FpConfig{2, energy.nbits});
      AblationReport report =
          run_ablation(routes, energy, bench.references, fps);
      write_report_files(report.to_json(), report.to_csv(), ab_report);
      for (const EvalReport& mode : report.modes)
        std::cout << mode.mode << ": top-1 " << mode.topk_accuracy.front()
                  << "\n";
      std::cout << "-> " << ab_report << ".{json,csv}\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
