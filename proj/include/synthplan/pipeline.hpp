#pragma once

#include <atomic>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "synthplan/energy.hpp"
#include "synthplan/metrics.hpp"
#include "synthplan/planners.hpp"

namespace synthplan {

inline int default_threads() {
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(lo, hi) over contiguous chunks of [0, n) on `threads` workers.
// Results must be written to per-index slots, which keeps the output
// independent of the thread count. The first exception is rethrown.
template <typename Fn>
inline void parallel_chunks(std::size_t n, int threads, Fn fn) {
  std::size_t workers =
      std::min<std::size_t>(std::max(threads, 1), n == 0 ? 1 : n);
  if (workers <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::mutex err_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  std::size_t base = n / workers, rem = n % workers, start = 0;
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t len = base + (w < rem ? 1 : 0);
    pool.emplace_back([&, lo = start, hi = start + len]() {
      try {
        fn(lo, hi);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
    start += len;
  }
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

enum class PlanAlgo { Greedy, Beam, Retrostar };

inline PlanAlgo plan_algo_from_string(const std::string& s) {
  if (s == "greedy") return PlanAlgo::Greedy;
  if (s == "beam") return PlanAlgo::Beam;
  if (s == "retrostar") return PlanAlgo::Retrostar;
  throw std::invalid_argument("unknown planner: " + s);
}

// Plans every target with the chosen algorithm and keeps the k best routes
// per target (ranked by log probability). Targets without a route are absent
// from the result. Retro* uses the benchmark-derived value oracle. Parallel
// over targets; output independent of the thread count.
inline RoutesByTarget plan_routes(const Benchmark& bench,
                                  const OneStepModel& model,
                                  const std::vector<std::string>& targets,
                                  PlanAlgo algo, const SearchLimits& limits,
                                  int k, int threads) {
  if (k < 1) throw std::invalid_argument("plan_routes: k must be >= 1");
  limits.validate();
  std::vector<std::vector<Route>> per_target(targets.size());
  parallel_chunks(targets.size(), threads, [&](std::size_t lo, std::size_t hi) {
    Proposer proposer(model, bench.rules);
    std::function<double(const std::string&)> value;
    if (algo == PlanAlgo::Retrostar) value = oracle_value_fn(bench, proposer);
    SearchLimits lim = limits;
    lim.beam_width = std::max(limits.beam_width, k);
    for (std::size_t i = lo; i < hi; ++i) {
      const std::string& target = targets[i];
      std::vector<Route> routes;
      switch (algo) {
        case PlanAlgo::Beam:
          routes = beam_search_plan(target, proposer, bench.inventory_set, lim);
          break;
        case PlanAlgo::Retrostar:
          routes = retrostar_plan(target, proposer, bench.inventory_set, value,
                                  lim);
          break;
        case PlanAlgo::Greedy: {
          auto r = greedy_dfs_plan(target, proposer, bench.inventory_set, lim);
          if (r) routes.push_back(*r);
          break;
        }
      }
      if (static_cast<int>(routes.size()) > k) routes.resize(k);
      per_target[i] = std::move(routes);
    }
  });
  RoutesByTarget out;
  for (std::size_t i = 0; i < targets.size(); ++i)
    if (!per_target[i].empty()) out[targets[i]] = std::move(per_target[i]);
  return out;
}

// Parallel pair construction from candidate pools; identical to
// build_pairs_from_pools but with a per-thread reward context. Output is
// independent of the thread count.
inline std::vector<PreferencePair> build_pairs_parallel(
    const RoutesByTarget& pools, const Benchmark& bench, Criterion criterion,
    const OracleLimits& oracle, FpConfig fp, int k_samples,
    int max_pairs_per_target, int threads) {
  std::vector<const std::pair<const std::string, std::vector<Route>>*> items;
  for (const auto& entry : pools) items.push_back(&entry);
  std::vector<std::vector<PreferencePair>> per_target(items.size());
  parallel_chunks(items.size(), threads, [&](std::size_t lo, std::size_t hi) {
    FpCache fps(fp);
    RewardContext ctx;
    ctx.rules = &bench.rules;
    ctx.fps = &fps;
    ctx.oracle = oracle;
    for (std::size_t i = lo; i < hi; ++i) {
      std::map<std::string, std::vector<Route>> one{*items[i]};
      per_target[i] = build_pairs_from_pools(one, bench, criterion, ctx,
                                             k_samples, max_pairs_per_target);
    }
  });
  std::vector<PreferencePair> pairs;
  for (std::vector<PreferencePair>& chunk : per_target)
    for (PreferencePair& p : chunk) pairs.push_back(std::move(p));
  return pairs;
}

}  // namespace synthplan
