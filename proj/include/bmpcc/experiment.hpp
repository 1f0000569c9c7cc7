#pragma once

#include "bmpcc/config.hpp"
#include "bmpcc/sim/closed_loop.hpp"
#include "bmpcc/sim/monte_carlo.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace bmpcc {

/// Planner setup for one variant of an experiment configuration.
PlannerSetup make_setup(const ExperimentConfig& config, PlannerVariant variant,
                        std::shared_ptr<const ReferencePath> path);

struct CaseResult {
  std::string label;
  PlannerVariant variant = PlannerVariant::full;
  bool failed = false;
  std::string error;
  sim::RunResult run;
};

/// The deterministic single-world cases of an intersection or custom
/// experiment (turn and cross for the intersection), every variant.
std::vector<CaseResult> run_cases(const ExperimentConfig& config);

/// Monte-Carlo settings of a merging experiment.
sim::MonteCarloConfig monte_carlo_config(const ExperimentConfig& config);

struct ExperimentReport {
  std::vector<std::string> artifacts;  ///< paths relative to the output directory
  int failed_runs = 0;
};

/// Runs the configured experiment and writes results, traces and a manifest
/// into config.output_dir. Progress goes to `log`.
ExperimentReport run_experiment(const ExperimentConfig& config, std::ostream& log);

}  // namespace bmpcc
