#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "synthplan/benchmark.hpp"

using namespace synthplan;

namespace {

BenchmarkConfig small_config() {
  BenchmarkConfig c;
  c.num_rules = 8;
  c.inventory_size = 30;
  c.molecule_budget = 300;
  c.max_depth = 4;
  c.max_atoms = 14;
  c.reference_cap = 8;
  c.growth_attempts = 2'000'000;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool dirs_equal(const std::filesystem::path& a, const std::filesystem::path& b) {
  for (const char* name : {"rules.jsonl", "inventory.txt", "reactions.jsonl",
                           "splits.json", "references.jsonl", "config.json"}) {
    if (slurp(a / name) != slurp(b / name)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("rule generation is deterministic and signature-distinct") {
  Rng r1(9), r2(9);
  auto a = generate_rules(r1, 12);
  auto b = generate_rules(r2, 12);
  REQUIRE(a.size() == 12);
  std::set<std::string> sigs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(symbol(a[i].a) == symbol(b[i].a));
    CHECK(a[i].order == b[i].order);
    sigs.insert(detail::rule_signature(a[i]));
  }
  CHECK(sigs.size() == 12);
}

TEST_CASE("generation is byte-deterministic") {
  Benchmark b1 = generate_benchmark(small_config(), 17);
  Benchmark b2 = generate_benchmark(small_config(), 17);
  auto tmp = std::filesystem::temp_directory_path();
  auto d1 = tmp / "synthplan_bench_a", d2 = tmp / "synthplan_bench_b";
  save_benchmark(b1, d1.string());
  save_benchmark(b2, d2.string());
  CHECK(dirs_equal(d1, d2));

  Benchmark loaded = load_benchmark(d1.string());
  auto d3 = tmp / "synthplan_bench_c";
  save_benchmark(loaded, d3.string());
  CHECK(dirs_equal(d1, d3));
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
  std::filesystem::remove_all(d3);
}

TEST_CASE("benchmark structural invariants") {
  Benchmark b = generate_benchmark(small_config(), 3);
  CHECK(static_cast<int>(b.inventory.size()) == 30);
  CHECK(static_cast<int>(b.molecules.size()) == 300);

  // Every molecule is canonical and unique.
  std::set<std::string> uniq(b.molecules.begin(), b.molecules.end());
  CHECK(uniq.size() == b.molecules.size());
  for (const std::string& m : b.molecules) CHECK(canonicalize(m) == m);

  // Reactions replay through the forward rules.
  std::map<std::string, ReactionRule> by_id;
  for (const ReactionRule& r : b.rules) by_id[r.id] = r;
  for (const ReactionRecord& rec : b.reactions) {
    auto product = apply_forward_rule(by_id.at(rec.rule_id),
                                      {parse_smiles(rec.reactants[0]),
                                       parse_smiles(rec.reactants[1])});
    REQUIRE(product.has_value());
    CHECK(canonical_smiles(*product) == rec.product);
  }

  // Targets have depth in [2, max_depth]; splits partition the target set.
  auto depths = b.min_depths();
  std::set<std::string> all_targets;
  for (const auto* split : {&b.train, &b.val, &b.test}) {
    for (const std::string& t : *split) {
      CHECK(!b.is_starting_material(t));
      CHECK(depths.at(t) >= 2);
      CHECK(depths.at(t) <= small_config().max_depth);
      CHECK(all_targets.insert(t).second);
    }
  }
  CHECK(all_targets.size() ==
        b.train.size() + b.val.size() + b.test.size());
  CHECK(b.train.size() >= 7 * all_targets.size() / 10);
}

TEST_CASE("reference routes are valid and capped") {
  Benchmark b = generate_benchmark(small_config(), 3);
  std::map<std::string, ReactionRule> by_id;
  for (const ReactionRule& r : b.rules) by_id[r.id] = r;
  int inspected = 0;
  for (const auto& [target, routes] : b.references) {
    REQUIRE(!routes.empty());
    CHECK(static_cast<int>(routes.size()) <= b.config.reference_cap);
    for (const Route& route : routes) {
      CHECK(route.target == target);
      REQUIRE(!route.steps.empty());
      CHECK(route.steps.front().product == target);
      for (const std::string& leaf : route.leaves())
        CHECK(b.is_starting_material(leaf));
      for (const RouteStep& step : route.steps) {
        auto product = apply_forward_rule(by_id.at(step.rule_id),
                                          {parse_smiles(step.reactants[0]),
                                           parse_smiles(step.reactants[1])});
        REQUIRE(product.has_value());
        CHECK(canonical_smiles(*product) == step.product);
      }
    }
    if (++inspected >= 40) break;
  }
  CHECK(inspected > 0);
}

TEST_CASE("route extraction enumerates alternative producers") {
  // Hand-built micro network: T is producible two ways from inventory.
  Benchmark b;
  b.config.reference_cap = 8;
  b.rules = {ReactionRule{"r0", Element::C, Element::N, 1, Element::Cl,
                          Element::O},
             ReactionRule{"r1", Element::C, Element::C, 1, Element::Br,
                          Element::Br}};
  b.inventory = {"A", "B", "C", "D"};
  b.inventory_set = {"A", "B", "C", "D"};
  b.molecules = {"A", "B", "C", "D", "M", "T"};
  b.reactions = {
      ReactionRecord{"M", {"A", "B"}, "r0"},
      ReactionRecord{"T", {"C", "M"}, "r0"},
      ReactionRecord{"T", {"D", "M"}, "r1"},
  };
  auto routes = extract_reference_routes(b, "T", 8);
  REQUIRE(routes.size() == 2);
  for (const Route& r : routes) {
    CHECK(r.target == "T");
    CHECK(r.steps.size() == 2);
  }
  CHECK(routes[0].steps[0].rule_id == "r0");
  CHECK(routes[1].steps[0].rule_id == "r1");

  // Cap truncates.
  CHECK(extract_reference_routes(b, "T", 1).size() == 1);
  CHECK_THROWS_AS(extract_reference_routes(b, "A", 8), std::invalid_argument);
}

TEST_CASE("config json round trip") {
  BenchmarkConfig c = small_config();
  BenchmarkConfig back = config_from_json(config_to_json(c));
  CHECK(back.num_rules == c.num_rules);
  CHECK(back.inventory_size == c.inventory_size);
  CHECK(back.molecule_budget == c.molecule_budget);
  CHECK(back.max_depth == c.max_depth);
  CHECK(back.max_atoms == c.max_atoms);
  CHECK(back.reference_cap == c.reference_cap);
  CHECK(back.growth_attempts == c.growth_attempts);
  CHECK_THROWS_AS(
      [] {
        BenchmarkConfig bad;
        bad.inventory_size = 5;
        bad.validate();
      }(),
      std::invalid_argument);
}
