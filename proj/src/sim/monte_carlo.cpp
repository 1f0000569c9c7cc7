#include "bmpcc/sim/monte_carlo.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace bmpcc::sim {

void MonteCarloConfig::validate() const {
  if (n_runs < 1) throw std::invalid_argument("MonteCarloConfig: n_runs must be >= 1");
  if (variants.empty()) throw std::invalid_argument("MonteCarloConfig: no planner variants");
  if (workers < 1) throw std::invalid_argument("MonteCarloConfig: workers must be >= 1");
  merging.validate();
  idm.validate();
  planner.validate();
}

const VariantStats& MonteCarloResult::stats(PlannerVariant variant) const {
  for (const VariantStats& s : table) {
    if (s.variant == variant) return s;
  }
  throw std::out_of_range("MonteCarloResult: variant " + to_string(variant) + " not in table");
}

std::uint64_t run_seed(std::uint64_t master, int run) {
  std::uint64_t z = master ^ (0xd1b54a32d192ed03ULL * (static_cast<std::uint64_t>(run) + 1));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

VariantStats summarize(PlannerVariant variant, const std::vector<RunSummary>& runs) {
  VariantStats s;
  s.variant = variant;
  double cost = 0.0;
  double solve = 0.0;
  for (const RunSummary& r : runs) {
    if (r.variant != variant) continue;
    ++s.runs;
    if (r.failed) {
      ++s.failed;
      continue;
    }
    switch (r.outcome) {
      case Outcome::success: ++s.success; break;
      case Outcome::aborted: ++s.aborted; break;
      case Outcome::collision: ++s.collision; break;
    }
    cost += r.cost;
    solve += r.mean_solve_ms;
    s.max_solve_ms = std::max(s.max_solve_ms, r.max_solve_ms);
  }
  const int ok = s.runs - s.failed;
  if (ok > 0) {
    s.mean_cost = cost / ok;
    s.mean_solve_ms = solve / ok;
  }
  return s;
}

MonteCarloResult monte_carlo(const MonteCarloConfig& config,
                             const std::function<void(int done, int total)>& progress) {
  config.validate();
  const int n_variants = static_cast<int>(config.variants.size());
  const int total = config.n_runs * n_variants;
  std::vector<RunSummary> runs(static_cast<std::size_t>(total));
  std::atomic<int> next{0};
  std::atomic<int> done{0};
  std::mutex progress_mutex;

  auto worker = [&] {
    for (int job = next++; job < total; job = next++) {
      const int run = job / n_variants;
      RunSummary& out = runs[static_cast<std::size_t>(job)];
      out.run = run;
      out.variant = config.variants[static_cast<std::size_t>(job % n_variants)];
      out.seed = run_seed(config.seed, run);
      try {
        const World world = merging_world(config.merging, config.idm, out.seed);
        PlannerSetup setup;
        setup.variant = out.variant;
        setup.config = config.planner;
        setup.path = world.ego_path;
        RunResult result = run_closed_loop(world, setup, out.seed, config.loop);
        out.outcome = result.outcome;
        out.cost = result.cost;
        out.cycles = static_cast<int>(result.solve_ms.size());
        out.fallbacks = result.fallbacks;
        if (!result.solve_ms.empty()) {
          out.mean_solve_ms = std::accumulate(result.solve_ms.begin(), result.solve_ms.end(), 0.0) /
                              static_cast<double>(result.solve_ms.size());
          out.max_solve_ms = *std::max_element(result.solve_ms.begin(), result.solve_ms.end());
        }
        if (config.keep_traces) out.trace = std::move(result.trace);
      } catch (const std::exception& e) {
        out.failed = true;
        out.error = e.what();
      }
      const int finished = ++done;
      if (progress) {
        const std::lock_guard<std::mutex> lock(progress_mutex);
        progress(finished, total);
      }
    }
  };

  const int n_threads = std::min(config.workers, total);
  std::vector<std::thread> threads;
  for (int t = 1; t < n_threads; ++t) threads.emplace_back(worker);
  worker();
  for (std::thread& t : threads) t.join();

  MonteCarloResult result;
  for (PlannerVariant v : config.variants) result.table.push_back(summarize(v, runs));
  result.runs = std::move(runs);
  return result;
}

}  // namespace bmpcc::sim
