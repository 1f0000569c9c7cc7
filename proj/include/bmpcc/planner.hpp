#pragma once

#include "bmpcc/branch_mpcc.hpp"
#include "bmpcc/decision_postponing.hpp"
#include "bmpcc/prediction.hpp"
#include "bmpcc/scenario_selection.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace bmpcc {

enum class PlannerVariant { full, cmpcc, scmpcc, no_ss2, no_ss3, no_ss4, no_dp };

std::string to_string(PlannerVariant variant);
/// Accepts the names produced by to_string. Throws std::invalid_argument.
PlannerVariant parse_variant(const std::string& name);
std::vector<PlannerVariant> all_variants();

struct PlannerConfig {
  int horizon = 40;
  double dt = 0.1;
  int max_scenarios = 2;
  double lambda = 0.5;
  PostponingConfig postponing;
  CostWeights weights;
  VehicleLimits limits;
  MpccSettings mpcc;
  TreeSolverOptions solver;
  PredictorConfig predictor;

  void validate() const;
};

struct CycleDiagnostics {
  int clusters = 0;
  int branching_index = 0;
  std::vector<int> joint_modes;
  std::vector<double> weights;
  std::vector<double> max_cep;  ///< per TP
  SolveStatus status = SolveStatus::converged;
  int iterations = 0;
  double kkt_residual = 0.0;
  double max_violation = 0.0;
  double predict_ms = 0.0;
  double select_ms = 0.0;
  double solve_ms = 0.0;
  double total_ms = 0.0;
};

struct CycleResult {
  PlanTree plan;
  CycleDiagnostics diagnostics;
  PredictionSet predictions;
};

struct PlannerSetup {
  PlannerVariant variant = PlannerVariant::full;
  PlannerConfig config;
  std::shared_ptr<const ReferencePath> path;
};

/// Plan executed by the ego if no better guess exists: the previous plan's
/// dominant branch shifted by one step, or a constant-velocity rollout.
PlanTrajectory assumed_plan(const PlanTree* previous, const EgoState& z0, const PlannerConfig& config);

/// Scenario tree the variant plans over.
ScenarioTree variant_tree(PlannerVariant variant, const PredictionSet& predictions,
                          const PlanTrajectory& plan, const PlannerConfig& config,
                          CycleDiagnostics& diagnostics);

/// Warm start for `tree` from the previous solution: every scenario takes the
/// branch of the previous scenario with the nearest representative joint mode,
/// shifted one step. Without a previous plan the inputs hold the current speed.
TreeSolution<kStateDim, kInputDim> shifted_warm_start(const PlanTree* previous, const ScenarioTree& tree,
                                                      const EgoState& z0, const PlannerConfig& config);

/// One receding-horizon cycle from given predictions.
CycleResult plan_cycle(const PredictionSet& predictions, const EgoState& z0, const PlanTree* previous,
                       const PlannerSetup& setup);

/// One receding-horizon cycle including the prediction step.
CycleResult plan_cycle(const Scene& scene, const EgoState& z0, const PlanTree* previous,
                       const PlannerSetup& setup, std::uint64_t seed);

}  // namespace bmpcc
