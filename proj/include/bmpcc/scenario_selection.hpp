#pragma once

#include "bmpcc/geometry.hpp"
#include "bmpcc/prediction.hpp"
#include "bmpcc/vehicle.hpp"

#include <vector>

namespace bmpcc {

/// Ego motion plan of the previous cycle, one state per horizon step.
struct PlanTrajectory {
  std::vector<EgoState> states;

  [[nodiscard]] int horizon() const { return static_cast<int>(states.size()); }
};

/// Constant-velocity rollout used when no previous plan exists.
PlanTrajectory constant_velocity_plan(const EgoState& z0, int horizon, double dt,
                                      const VehicleLimits& limits);

// Joint scene modes ---------------------------------------------------------
//
// Modes of different TPs are paired by rank: joint mode r uses the r-th most
// likely mode of every TP (the last mode for TPs with fewer than r+1 modes).

int joint_mode_count(const PredictionSet& predictions);
int joint_member(const TpPrediction& tp, int joint_mode);
/// Mean rank-r probability over the multi-modal TPs; sums to 1 over r.
double joint_probability(const PredictionSet& predictions, int joint_mode);

/// True iff no segment joining the two trajectories' means at equal steps
/// crosses the ego rectangle of the plan at that step.
bool uvd_equivalent(const ModePrediction& a, const ModePrediction& b, const PlanTrajectory& plan,
                    const Extent& ego);

/// Connected components of the all-TP UVD relation over joint modes. Each
/// cluster is sorted ascending; clusters are ordered by their first member.
std::vector<std::vector<int>> cluster_modes(const PredictionSet& predictions,
                                            const PlanTrajectory& plan, const Extent& ego);

/// Half extents (along ego heading, across it) of the region of TP centers
/// that may overlap the ego, given the relative heading.
Vec2 inflated_half_extents(double ego_heading, const Extent& ego, double tp_heading,
                           const Extent& tp);

/// Mass of a 2D Gaussian inside an oriented rectangle.
double gaussian_mass_in_rect(const Vec2& mean, const Mat2& cov, const RectFootprint& rect);

/// Collision event probability density of one TP step against one ego state.
double cep_density(const GaussianState& tp, const Extent& tp_extent, const EgoState& ego,
                   const Extent& ego_extent, double dt);

struct ModeRisk {
  double cep = 0.0;       ///< clamped to [0, 1]
  double cep_raw = 0.0;   ///< unclamped sum
  double decision = 0.0;  ///< cep + lambda * probability
  std::vector<double> density;
};

/// Accumulated risk of one predicted mode against the ego plan.
ModeRisk cep(const ModePrediction& mode, const Extent& tp_extent, const PlanTrajectory& plan,
             const Extent& ego_extent, double dt);

/// risk[o][m] follows the order of `predictions.tps[o].modes`.
struct RiskReport {
  double lambda = 0.5;
  std::vector<std::vector<ModeRisk>> risk;

  [[nodiscard]] double max_cep(std::size_t tp) const;
};

RiskReport assess_risk(const PredictionSet& predictions, const PlanTrajectory& plan,
                       const Extent& ego, double lambda);

struct Scenario {
  int joint_mode = -1;       ///< -1 for the obstacle-free scenario
  double weight = 1.0;
  double relevance = 0.0;    ///< summed decision value of the representative
  std::vector<int> members;  ///< joint modes of the cluster
  std::vector<int> tp_modes; ///< per TP, index into its mode list
};

struct ScenarioTree {
  std::vector<Scenario> scenarios;
  int branching_index = 0;
  int horizon = 0;

  void validate(int max_scenarios) const;
};

/// One representative per cluster (max summed decision value, lowest joint
/// mode on ties); keeps the `max_scenarios` most relevant clusters and weights
/// them by their renormalized cluster probability.
ScenarioTree select_scenarios(const PredictionSet& predictions,
                              const std::vector<std::vector<int>>& clusters,
                              const RiskReport& risk, double lambda, int max_scenarios);

/// The `count` most probable joint modes, weighted by probability.
ScenarioTree most_probable_scenarios(const PredictionSet& predictions, int count);

}  // namespace bmpcc
