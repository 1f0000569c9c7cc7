#pragma once

#include "bmpcc/planner.hpp"
#include "bmpcc/sim/closed_loop.hpp"
#include "bmpcc/sim/idm.hpp"
#include "bmpcc/sim/scenarios.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace bmpcc::sim {

struct MonteCarloConfig {
  int n_runs = 100;
  std::vector<PlannerVariant> variants = all_variants();
  std::uint64_t seed = 1;
  int workers = 1;
  MergingParams merging;
  IdmRanges idm;
  PlannerConfig planner;
  ClosedLoopOptions loop;
  bool keep_traces = false;

  void validate() const;
};

struct RunSummary {
  int run = 0;
  PlannerVariant variant = PlannerVariant::full;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  Outcome outcome = Outcome::success;
  double cost = 0.0;
  double mean_solve_ms = 0.0;
  double max_solve_ms = 0.0;
  int cycles = 0;
  int fallbacks = 0;
  std::vector<StepRecord> trace;  ///< only with keep_traces
};

struct VariantStats {
  PlannerVariant variant = PlannerVariant::full;
  int runs = 0;
  int success = 0;
  int aborted = 0;
  int collision = 0;
  int failed = 0;
  double mean_cost = 0.0;
  double mean_solve_ms = 0.0;
  double max_solve_ms = 0.0;

  [[nodiscard]] double rate(int count) const { return runs > failed ? double(count) / (runs - failed) : 0.0; }
};

struct MonteCarloResult {
  std::vector<VariantStats> table;  ///< in the order of config.variants
  std::vector<RunSummary> runs;     ///< run-major, then variant

  [[nodiscard]] const VariantStats& stats(PlannerVariant variant) const;
};

/// Seed of one run's world, derived from the master seed.
std::uint64_t run_seed(std::uint64_t master, int run);

/// Every variant drives the same sampled world per run. Jobs are spread over
/// `workers` threads; results do not depend on the worker count.
MonteCarloResult monte_carlo(const MonteCarloConfig& config,
                             const std::function<void(int done, int total)>& progress = {});

VariantStats summarize(PlannerVariant variant, const std::vector<RunSummary>& runs);

}  // namespace bmpcc::sim
