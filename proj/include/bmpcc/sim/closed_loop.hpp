#pragma once

#include "bmpcc/planner.hpp"
#include "bmpcc/sim/scenarios.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bmpcc::sim {

enum class Outcome { success, aborted, collision };

std::string to_string(Outcome outcome);

struct TpRecord {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;
  double v = 0.0;
  double a = 0.0;
  double length = 4.5;
  double width = 2.0;
};

struct PlanRecord {
  std::string status;
  int iterations = 0;
  double kkt_residual = 0.0;
  double max_violation = 0.0;
  double solve_ms = 0.0;
  double total_ms = 0.0;
  int branching_index = 0;
  int clusters = 0;
  std::vector<int> joint_modes;
  std::vector<double> weights;
  /// Per branch and step: x, y, v of the planned ego states.
  std::vector<std::vector<std::array<double, 3>>> branches;
};

/// State of the world at one simulation step and the input applied from it.
/// The last record of a trace is terminal: it carries no input.
struct StepRecord {
  int step = 0;
  double time = 0.0;
  EgoState ego;
  ControlInput input;
  bool executed = false;
  bool fallback = false;
  std::vector<TpRecord> tps;
  std::vector<double> intent_weights;  ///< concatenated over TPs
  PlanRecord plan;
  double stage_cost = 0.0;
};

struct OutcomeRule {
  ScenarioKind kind = ScenarioKind::custom;
  Extent ego;
  std::shared_ptr<const ReferencePath> path;
  double ramp_end_theta = std::numeric_limits<double>::infinity();
  double ramp_lane_contour = std::numeric_limits<double>::infinity();
};

OutcomeRule outcome_rule(const World& world, const VehicleLimits& limits);

/// collision if the ego rectangle overlaps a TP rectangle at any step;
/// aborted if, in merging, the ego is still on the ramp when it reaches the
/// ramp end or when the run ends; success otherwise.
Outcome classify_outcome(const std::vector<StepRecord>& trace, const OutcomeRule& rule);

/// Sum of stage costs over executed steps, with the TPs at their recorded positions.
double closed_loop_cost(const std::vector<StepRecord>& trace, const ReferencePath& path,
                        const CostWeights& weights);

/// Obstacle terms of the realized cost: TP footprints without uncertainty.
std::vector<ObstacleStep> realized_obstacles(const std::vector<TpRecord>& tps);

struct ClosedLoopOptions {
  double fallback_decel = 3.0;  ///< clipped to the longitudinal limit
  double filter_sigma = 0.5;
  double filter_floor = 0.02;
  int history = 10;
  bool record_branches = false;
};

struct RunResult {
  std::string world;
  PlannerVariant variant = PlannerVariant::full;
  Outcome outcome = Outcome::success;
  double cost = 0.0;
  std::vector<double> solve_ms;  ///< plan_cycle wall time per cycle
  std::vector<StepRecord> trace;
  int fallbacks = 0;
  double min_accel = 0.0;
};

/// Receding-horizon loop at the planner's dt: sense, plan, apply the shared
/// first input, advance the TPs, until collision, goal or timeout.
RunResult run_closed_loop(const World& world, const PlannerSetup& setup, std::uint64_t seed,
                          const ClosedLoopOptions& options = {});

/// Acceleration of one TP for the next step given the ego and the other TPs.
double tp_accel(const TpAgent& tp, const std::vector<TpAgent>& all, const EgoState& ego,
                const World& world, const VehicleLimits& limits);

}  // namespace bmpcc::sim
