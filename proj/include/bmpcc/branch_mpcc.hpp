#pragma once

#include "bmpcc/geometry.hpp"
#include "bmpcc/path.hpp"
#include "bmpcc/prediction.hpp"
#include "bmpcc/scalar.hpp"
#include "bmpcc/scenario_selection.hpp"
#include "bmpcc/tree_ocp.hpp"
#include "bmpcc/vehicle.hpp"

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <memory>
#include <span>
#include <vector>

namespace bmpcc {

struct CostWeights {
  Eigen::Matrix2d Q = Eigen::Vector2d(1.0, 5.0).asDiagonal();
  double q_v = 1.0;
  Eigen::Matrix3d R = Eigen::Vector3d(0.05, 10.0, 0.01).asDiagonal();
  double q_ob = 50.0;
  double q_lm = 5.0;
  double sigma = 0.5;

  void validate() const;
};

/// One TP at one horizon step as seen by the planner.
struct ObstacleStep {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double length = 4.5;     ///< footprint for the hard constraint
  double width = 2.0;
  double scale_lon = 4.5;  ///< potential field scales l^o, w^o
  double scale_lat = 2.0;
};

/// Obstacle step from a predicted Gaussian; the potential scales grow with
/// two standard deviations of the position uncertainty.
ObstacleStep obstacle_from_prediction(const GaussianState& g, double length, double width);

/// The ego rectangle is covered by three discs along its long axis.
inline constexpr int kEgoDiscs = 3;

struct EgoDiscCover {
  std::array<double, kEgoDiscs> offsets{};
  double radius = 0.0;
};

EgoDiscCover ego_disc_cover(const Extent& ego);

/// Exponent (dx/l)^2 + (dy/w)^2 of the obstacle potential, offsets in the obstacle frame.
template <class Scalar>
Scalar obstacle_exponent(const StateVector<Scalar>& z, const ObstacleStep& ob) {
  const double c = std::cos(ob.heading);
  const double s = std::sin(ob.heading);
  const Scalar ex = z[0] - ob.x;
  const Scalar ey = z[1] - ob.y;
  const Scalar dx = (c * ex + s * ey) / ob.scale_lon;
  const Scalar dy = (-s * ex + c * ey) / ob.scale_lat;
  return dx * dx + dy * dy;
}

template <class Scalar>
Scalar obstacle_potential(const StateVector<Scalar>& z, const ObstacleStep& ob) {
  using std::exp;
  return exp(-obstacle_exponent(z, ob));
}

template <class Scalar>
Scalar lane_marker_potential(const Scalar& contour, double marker, double sigma) {
  using std::exp;
  const Scalar d = (marker - contour) / sigma;
  return exp(-(d * d));
}

/// Ellipse separation per ego disc: 1 - (dx/alpha)^2 - (dy/beta)^2 <= 0 in the
/// obstacle frame, alpha = sqrt2 (l/2 + r) + margin, beta = sqrt2 (w/2 + r) + margin.
/// The ellipse contains the obstacle rectangle grown by the disc radius, so
/// all residuals negative implies no overlap of the two rectangles.
template <class Scalar>
Eigen::Matrix<Scalar, kEgoDiscs, 1> obstacle_constraint(const StateVector<Scalar>& z,
                                                        const ObstacleStep& ob, double margin,
                                                        const Extent& ego) {
  using std::cos;
  using std::sin;
  const EgoDiscCover cover = ego_disc_cover(ego);
  const double alpha = std::numbers::sqrt2 * (0.5 * ob.length + cover.radius) + margin;
  const double beta = std::numbers::sqrt2 * (0.5 * ob.width + cover.radius) + margin;
  const double c = std::cos(ob.heading);
  const double s = std::sin(ob.heading);
  const Scalar cz = cos(z[2]);
  const Scalar sz = sin(z[2]);
  Eigen::Matrix<Scalar, kEgoDiscs, 1> h;
  for (int i = 0; i < kEgoDiscs; ++i) {
    const double off = cover.offsets[static_cast<std::size_t>(i)];
    const Scalar ex = z[0] + off * cz - ob.x;
    const Scalar ey = z[1] + off * sz - ob.y;
    const Scalar dx = (c * ex + s * ey) / alpha;
    const Scalar dy = (-s * ex + c * ey) / beta;
    h[i] = 1.0 - dx * dx - dy * dy;
  }
  return h;
}

/// [e_c - (d_lb - w/2), -e_c - (d_rb - w/2)] <= 0.
template <class Scalar>
Eigen::Matrix<Scalar, 2, 1> boundary_constraint(const StateVector<Scalar>& z,
                                                const ReferencePath& path, double ego_width) {
  const PathPose<Scalar> ref = path.evaluate(z[6]);
  const ContourLag<Scalar> e = contour_lag_errors(ref, z[0], z[1]);
  Eigen::Matrix<Scalar, 2, 1> h;
  h << e.contour - (ref.d_lb - 0.5 * ego_width), -e.contour - (ref.d_rb - 0.5 * ego_width);
  return h;
}

/// Stage cost [e_c e_l] Q [e_c e_l]^T - q_v theta' + u^T R u + potentials.
/// Throws std::domain_error if theta is outside the path.
double running_cost(const EgoState& z, const ControlInput& u, const ReferencePath& path,
                    const CostWeights& weights, std::span<const ObstacleStep> obstacles);

struct MpccSettings {
  double dt = 0.1;
  double margin = 0.2;
  double overshoot_weight = 100.0;
  bool hard_obstacles = true;
};

/// Branch MPCC program over a scenario tree: one scenario per selected joint
/// mode, inputs shared up to the branching index.
class BranchMpccProblem final : public TreeOcp<kStateDim, kInputDim> {
 public:
  BranchMpccProblem(const ScenarioTree& tree, const PredictionSet& predictions, const EgoState& z0,
                    std::shared_ptr<const ReferencePath> path, const CostWeights& weights,
                    const VehicleLimits& limits, const MpccSettings& settings);

  [[nodiscard]] int horizon() const override { return horizon_; }
  [[nodiscard]] int scenario_count() const override { return static_cast<int>(weights_.size()); }
  [[nodiscard]] int branching_index() const override { return branching_; }
  [[nodiscard]] double scenario_weight(int s) const override {
    return weights_[static_cast<std::size_t>(s)];
  }

  State dynamics(int k, const State& z, const Input& u, StateJacobian* dz,
                 InputJacobian* du) const override;
  void stage(int k, int s, const State& z, const Input& u, bool derivatives,
             StageModel<kStateDim, kInputDim>& out) const override;

  [[nodiscard]] const EgoState& initial_state() const { return z0_; }
  [[nodiscard]] int input_variable_count() const;
  [[nodiscard]] int state_variable_count() const;
  [[nodiscard]] const std::vector<ObstacleStep>& obstacles(int k, int s) const {
    return obstacles_[static_cast<std::size_t>(s)][static_cast<std::size_t>(k)];
  }
  [[nodiscard]] const ReferencePath& path() const { return *path_; }
  [[nodiscard]] const ScenarioTree& tree() const { return tree_; }

 private:
  template <class Scalar>
  void stage_terms(int k, int s, const StateVector<Scalar>& z, const InputVector<Scalar>& u,
                   Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& residual, Scalar& linear,
                   Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& ineq) const;

  ScenarioTree tree_;
  int horizon_ = 0;
  int branching_ = 0;
  EgoState z0_;
  std::shared_ptr<const ReferencePath> path_;
  CostWeights cost_;
  VehicleLimits limits_;
  MpccSettings settings_;
  Eigen::Matrix2d q_sqrt_;
  Eigen::Matrix3d r_sqrt_;
  std::vector<double> weights_;
  std::vector<std::vector<std::vector<ObstacleStep>>> obstacles_;  // [s][k][o]
};

/// Solved tree plus the scenario bookkeeping it was built for.
struct PlanTree {
  TreeSolution<kStateDim, kInputDim> solution;
  ScenarioTree tree;

  [[nodiscard]] int scenario_count() const { return static_cast<int>(solution.states.size()); }
  [[nodiscard]] int horizon() const {
    return solution.states.empty() ? 0 : static_cast<int>(solution.states[0].size());
  }
  [[nodiscard]] int branching_index() const { return tree.branching_index; }
  [[nodiscard]] EgoState state(int s, int k) const {
    return EgoState::from_vector(solution.states[static_cast<std::size_t>(s)][static_cast<std::size_t>(k)]);
  }
  [[nodiscard]] ControlInput input(int s, int k) const {
    return ControlInput::from_vector(solution.inputs[static_cast<std::size_t>(s)][static_cast<std::size_t>(k)]);
  }
  [[nodiscard]] SolveStatus status() const { return solution.status; }
  [[nodiscard]] double cost() const { return solution.cost; }
  /// Scenario with the largest weight (first on ties).
  [[nodiscard]] int dominant_scenario() const;
  /// Trajectory of one branch, for the next cycle's scenario selection.
  [[nodiscard]] PlanTrajectory trajectory(int s) const;
};

/// Throws ContractError if the tree and the predictions disagree.
std::unique_ptr<BranchMpccProblem> build_nlp(const ScenarioTree& tree,
                                             const PredictionSet& predictions, const EgoState& z0,
                                             std::shared_ptr<const ReferencePath> path,
                                             const CostWeights& weights,
                                             const VehicleLimits& limits,
                                             const MpccSettings& settings = {});

PlanTree solve(const BranchMpccProblem& nlp, const PlanTree* warm_start,
               const TreeSolverOptions& options = {});

}  // namespace bmpcc
