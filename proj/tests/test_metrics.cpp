#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "synthplan/metrics.hpp"

using namespace synthplan;

namespace {

Route one_step_route(const std::string& target, const ReactantSet& reactants,
                     double logp, const std::string& rule = "r0") {
  Route r;
  r.target = target;
  r.log_prob = logp;
  r.steps = {RouteStep{target, reactants, rule, logp}};
  return r;
}

}  // namespace

TEST_CASE("exact match is set-wise against any reference") {
  std::vector<std::set<std::string>> refs{{"A", "B"}, {"C"}};
  CHECK(exact_match_starting_materials({"A", "B"}, refs));
  CHECK(exact_match_starting_materials({"C"}, refs));
  CHECK(!exact_match_starting_materials({"A"}, refs));
  CHECK(!exact_match_starting_materials({"A", "B", "C"}, refs));
  CHECK_THROWS_AS(exact_match_starting_materials({"A"}, {}),
                  std::invalid_argument);
}

TEST_CASE("topk table counts the first matching rank") {
  std::map<std::string, std::vector<Route>> references;
  references["T1"] = {one_step_route("T1", {"A", "B"}, 0.0)};
  references["T2"] = {one_step_route("T2", {"C", "D"}, 0.0)};
  references["T3"] = {one_step_route("T3", {"E", "F"}, 0.0)};

  RoutesByTarget results;
  // T1 matches at rank 1, T2 at rank 3, T3 never.
  results["T1"] = {one_step_route("T1", {"A", "B"}, -0.1)};
  results["T2"] = {one_step_route("T2", {"X", "Y"}, -0.1),
                   one_step_route("T2", {"X", "Z"}, -0.2),
                   one_step_route("T2", {"C", "D"}, -0.3)};
  results["T3"] = {one_step_route("T3", {"Q", "R"}, -0.1)};

  EvalReport report = evaluate_topk(results, references, 5, "base");
  REQUIRE(report.topk_accuracy.size() == 5);
  CHECK(report.topk_accuracy[0] == doctest::Approx(100.0 / 3.0));
  CHECK(report.topk_accuracy[1] == doctest::Approx(100.0 / 3.0));
  CHECK(report.topk_accuracy[2] == doctest::Approx(200.0 / 3.0));
  CHECK(report.topk_accuracy[3] == doctest::Approx(200.0 / 3.0));
  CHECK(report.topk_accuracy[4] == doctest::Approx(200.0 / 3.0));
  // Monotone non-decreasing in k.
  for (std::size_t k = 1; k < report.topk_accuracy.size(); ++k)
    CHECK(report.topk_accuracy[k] >= report.topk_accuracy[k - 1]);

  REQUIRE(report.records.size() == 3);
  CHECK(report.records[0].matched_rank == 1);
  CHECK(report.records[1].matched_rank == 3);
  CHECK(report.records[2].matched_rank == 0);

  // One-step references -> every target lands in depth bucket 1.
  REQUIRE(report.depth_top1.count(1) == 1);
  CHECK(report.depth_top1.at(1).count == 3);
  CHECK(report.depth_top1.at(1).top1_hits == 1);
  CHECK(report.depth_top1.at(1).accuracy() == doctest::Approx(100.0 / 3.0));

  // A result target absent from the references is an error.
  RoutesByTarget orphan;
  orphan["nope"] = {one_step_route("nope", {"A"}, -0.1)};
  CHECK_THROWS_AS(evaluate_topk(orphan, references, 5, "base"),
                  std::invalid_argument);
}

TEST_CASE("depth buckets use the shallowest reference") {
  std::map<std::string, std::vector<Route>> references;
  Route deep;
  deep.target = "T";
  deep.log_prob = 0.0;
  deep.steps = {RouteStep{"T", {"M", "A"}, "r0", 0.0},
                RouteStep{"M", {"B", "C"}, "r0", 0.0}};
  references["T"] = {deep, one_step_route("T", {"X", "Y"}, 0.0)};
  RoutesByTarget results;
  results["T"] = {one_step_route("T", {"X", "Y"}, -0.1)};
  EvalReport report = evaluate_topk(results, references, 3, "m");
  CHECK(report.records[0].reference_depth == 1);
  CHECK(report.depth_top1.count(1) == 1);
  CHECK(report.records[0].matched_rank == 1);
}

TEST_CASE("routes jsonl round trip preserves ranking order") {
  RoutesByTarget routes;
  routes["T1"] = {one_step_route("T1", {"A", "B"}, -0.5),
                  one_step_route("T1", {"C", "D"}, -0.2)};
  routes["T2"] = {one_step_route("T2", {"E", "F"}, -0.9)};
  auto path = std::filesystem::temp_directory_path() / "synthplan_routes.jsonl";
  save_routes_jsonl(routes, path.string());
  RoutesByTarget loaded = load_routes_jsonl(path.string());
  REQUIRE(loaded.size() == 2);
  REQUIRE(loaded["T1"].size() == 2);
  // File order is the ranking: the -0.5 route was saved first.
  CHECK(loaded["T1"][0].log_prob == doctest::Approx(-0.5));
  CHECK(loaded["T1"][1].log_prob == doctest::Approx(-0.2));
  CHECK(route_key(loaded["T2"][0]) == route_key(routes["T2"][0]));
  std::filesystem::remove(path);
}

TEST_CASE("ablation with a zero energy model collapses to the base mode") {
  FpCache fps(FpConfig{2, 64});
  EnergyModel zero = EnergyModel::zeros("feasibility", 64, 4);
  std::map<std::string, std::vector<Route>> references;
  std::string t1 = canonicalize("CCN");
  std::string t2 = canonicalize("CC=O");
  references[t1] = {one_step_route(t1, {"CO", "CN"}, 0.0)};
  references[t2] = {one_step_route(t2, {"CS", "CF"}, 0.0)};
  RoutesByTarget candidates;
  candidates[t1] = {one_step_route(t1, {"CO", "CN"}, -0.2),
                    one_step_route(t1, {"CCl", "CBr"}, -0.7)};
  candidates[t2] = {one_step_route(t2, {"CI", "CP"}, -0.1),
                    one_step_route(t2, {"CS", "CF"}, -0.4)};

  AblationReport report = run_ablation(candidates, zero, references, fps, 3);
  REQUIRE(report.modes.size() == 4);
  CHECK(report.modes[0].mode == "-logP");
  CHECK(report.modes[1].mode == "-logP+E");
  CHECK(report.modes[2].mode == "E");
  CHECK(report.modes[3].mode == "-logP-E");
  // Zero energy: residual and sign-flipped modes equal the base ranking.
  CHECK(report.modes[1].topk_accuracy == report.modes[0].topk_accuracy);
  CHECK(report.modes[3].topk_accuracy == report.modes[0].topk_accuracy);
  CHECK(report.modes[0].topk_accuracy[0] == doctest::Approx(50.0));

  nlohmann::json j = report.to_json();
  CHECK(j["delta_top1"]["-logP"].get<double>() == doctest::Approx(0.0));
  CHECK(j["delta_top1"]["-logP+E"].get<double>() == doctest::Approx(0.0));

  auto base = (std::filesystem::temp_directory_path() / "synthplan_report")
                  .string();
  write_report_files(j, report.to_csv(), base);
  CHECK(std::filesystem::exists(base + ".json"));
  CHECK(std::filesystem::exists(base + ".csv"));
  std::filesystem::remove(base + ".json");
  std::filesystem::remove(base + ".csv");
}
