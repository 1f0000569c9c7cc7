#include "bmpcc/branch_mpcc.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <stdexcept>
#include <utility>

namespace bmpcc {

namespace {

template <int Dim>
bool is_psd(const Eigen::Matrix<double, Dim, Dim>& m) {
  if (!m.allFinite() || !m.isApprox(m.transpose(), 1e-12)) return false;
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, Dim, Dim>> eig(m);
  return eig.eigenvalues().minCoeff() >= -1e-12;
}

template <int Dim>
Eigen::Matrix<double, Dim, Dim> psd_sqrt(const Eigen::Matrix<double, Dim, Dim>& m) {
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, Dim, Dim>> eig(m);
  const Eigen::Matrix<double, Dim, 1> root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

using Ad = Dual<kStateDim + kInputDim>;

}  // namespace

void CostWeights::validate() const {
  if (!is_psd<2>(Q)) throw std::invalid_argument("CostWeights: Q must be symmetric PSD");
  if (!is_psd<3>(R)) throw std::invalid_argument("CostWeights: R must be symmetric PSD");
  if (!(q_v > 0.0 && q_ob > 0.0 && q_lm > 0.0 && sigma > 0.0)) {
    throw std::invalid_argument("CostWeights: q_v, q_ob, q_lm and sigma must be positive");
  }
}

ObstacleStep obstacle_from_prediction(const GaussianState& g, double length, double width) {
  const Vec2 lon(std::cos(g.heading), std::sin(g.heading));
  const Vec2 lat(-lon.y(), lon.x());
  const double sigma_lon = std::sqrt(std::max(lon.dot(g.cov * lon), 0.0));
  const double sigma_lat = std::sqrt(std::max(lat.dot(g.cov * lat), 0.0));
  ObstacleStep ob;
  ob.x = g.mean.x();
  ob.y = g.mean.y();
  ob.heading = g.heading;
  ob.length = length;
  ob.width = width;
  ob.scale_lon = length + 2.0 * sigma_lon;
  ob.scale_lat = width + 2.0 * sigma_lat;
  return ob;
}

EgoDiscCover ego_disc_cover(const Extent& ego) {
  const double piece = ego.length / kEgoDiscs;
  EgoDiscCover cover;
  for (int i = 0; i < kEgoDiscs; ++i) {
    cover.offsets[static_cast<std::size_t>(i)] = -0.5 * ego.length + (i + 0.5) * piece;
  }
  cover.radius = std::hypot(0.5 * piece, 0.5 * ego.width);
  return cover;
}

double running_cost(const EgoState& z, const ControlInput& u, const ReferencePath& path,
                    const CostWeights& weights, std::span<const ObstacleStep> obstacles) {
  const ContourLag<double> e = contour_lag_errors(path, z.x, z.y, z.theta);
  const Eigen::Vector2d err(e.contour, e.lag);
  const Eigen::Vector3d in = u.vector();
  double cost = err.dot(weights.Q * err) - weights.q_v * u.path_speed + in.dot(weights.R * in);
  const StateVector<double> zv = z.vector();
  for (const ObstacleStep& ob : obstacles) cost += weights.q_ob * obstacle_potential(zv, ob);
  for (double marker : path.lane_markers()) {
    cost += weights.q_lm * lane_marker_potential(e.contour, marker, weights.sigma);
  }
  return cost;
}

BranchMpccProblem::BranchMpccProblem(const ScenarioTree& tree, const PredictionSet& predictions,
                                     const EgoState& z0, std::shared_ptr<const ReferencePath> path,
                                     const CostWeights& weights, const VehicleLimits& limits,
                                     const MpccSettings& settings)
    : tree_(tree),
      horizon_(tree.horizon),
      branching_(tree.branching_index),
      z0_(z0),
      path_(std::move(path)),
      cost_(weights),
      limits_(limits),
      settings_(settings) {
  if (!path_) throw ContractError("build_nlp: missing reference path");
  if (tree.scenarios.empty()) throw ContractError("build_nlp: empty scenario tree");
  if (horizon_ < 2) throw ContractError("build_nlp: horizon must be at least 2");
  if (branching_ < 0 || branching_ > horizon_ - 1) throw ContractError("build_nlp: branching index out of range");
  if (!predictions.tps.empty() && predictions.horizon < horizon_) {
    throw ContractError("build_nlp: prediction horizon shorter than the plan horizon");
  }
  if (!(settings.dt > 0.0)) throw ContractError("build_nlp: dt must be positive");
  weights.validate();
  limits.validate();
  q_sqrt_ = psd_sqrt<2>(weights.Q);
  r_sqrt_ = psd_sqrt<3>(weights.R);

  const auto scenarios = tree.scenarios.size();
  obstacles_.assign(scenarios, std::vector<std::vector<ObstacleStep>>(static_cast<std::size_t>(horizon_)));
  double total = 0.0;
  for (std::size_t s = 0; s < scenarios; ++s) {
    const Scenario& sc = tree.scenarios[s];
    weights_.push_back(sc.weight);
    total += sc.weight;
    if (sc.joint_mode < 0) continue;
    if (sc.tp_modes.size() != predictions.tps.size()) {
      throw ContractError("build_nlp: scenario does not assign a mode to every TP");
    }
    for (std::size_t o = 0; o < predictions.tps.size(); ++o) {
      const TpPrediction& tp = predictions.tps[o];
      const int m = sc.tp_modes[o];
      if (m < 0 || m >= static_cast<int>(tp.modes.size())) throw ContractError("build_nlp: mode index out of range");
      const ModePrediction& mode = tp.modes[static_cast<std::size_t>(m)];
      if (static_cast<int>(mode.states.size()) < horizon_) throw ContractError("build_nlp: mode shorter than horizon");
      for (int k = 0; k < horizon_; ++k) {
        obstacles_[s][static_cast<std::size_t>(k)].push_back(
            obstacle_from_prediction(mode.states[static_cast<std::size_t>(k)], tp.length, tp.width));
      }
    }
  }
  if (!(total > 0.0)) throw ContractError("build_nlp: scenario weights must be positive");
  for (double& w : weights_) w /= total;
}

int BranchMpccProblem::input_variable_count() const {
  return TreeLayout(horizon_, scenario_count(), branching_).input_node_count() * kInputDim;
}

int BranchMpccProblem::state_variable_count() const {
  return TreeLayout(horizon_, scenario_count(), branching_).state_node_count() * kStateDim;
}

BranchMpccProblem::State BranchMpccProblem::dynamics(int, const State& z, const Input& u,
                                                     StateJacobian* dz, InputJacobian* du) const {
  if (dz == nullptr && du == nullptr) return rk4_step<double>(z, u, settings_.dt, limits_.wheelbase);
  StateVector<Ad> za;
  InputVector<Ad> ua;
  for (int i = 0; i < kStateDim; ++i) za[i] = Ad(z[i], kStateDim + kInputDim, i);
  for (int i = 0; i < kInputDim; ++i) ua[i] = Ad(u[i], kStateDim + kInputDim, kStateDim + i);
  const StateVector<Ad> next = rk4_step<Ad>(za, ua, settings_.dt, limits_.wheelbase);
  State value;
  for (int i = 0; i < kStateDim; ++i) {
    value[i] = next[i].value();
    if (dz != nullptr) dz->row(i) = next[i].derivatives().head<kStateDim>().transpose();
    if (du != nullptr) du->row(i) = next[i].derivatives().tail<kInputDim>().transpose();
  }
  return value;
}

template <class Scalar>
void BranchMpccProblem::stage_terms(int k, int s, const StateVector<Scalar>& z,
                                    const InputVector<Scalar>& u,
                                    Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& residual,
                                    Scalar& linear,
                                    Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& ineq) const {
  const std::vector<ObstacleStep>& obs = obstacles(k, s);
  const std::vector<double>& markers = path_->lane_markers();
  const auto n_obs = static_cast<Eigen::Index>(obs.size());
  const auto n_lm = static_cast<Eigen::Index>(markers.size());

  const PathPose<Scalar> ref = path_->evaluate(z[6]);
  const ContourLag<Scalar> e = contour_lag_errors(ref, z[0], z[1]);

  residual.resize(2 + 3 + n_obs + n_lm + 1);
  Eigen::Index r = 0;
  for (int i = 0; i < 2; ++i) residual[r++] = q_sqrt_(i, 0) * e.contour + q_sqrt_(i, 1) * e.lag;
  for (int i = 0; i < 3; ++i) residual[r++] = r_sqrt_(i, 0) * u[0] + r_sqrt_(i, 1) * u[1] + r_sqrt_(i, 2) * u[2];
  const double ob_gain = std::sqrt(cost_.q_ob);
  using std::exp;
  for (const ObstacleStep& ob : obs) residual[r++] = ob_gain * exp(-0.5 * obstacle_exponent(z, ob));
  const double lm_gain = std::sqrt(cost_.q_lm);
  for (double marker : markers) {
    const Scalar d = (marker - e.contour) / cost_.sigma;
    residual[r++] = lm_gain * exp(-0.5 * d * d);
  }
  const double theta = value_of(z[6]);
  const double pen = std::sqrt(settings_.overshoot_weight);
  if (theta > path_->theta_max()) {
    residual[r++] = pen * (z[6] - path_->theta_max());
  } else if (theta < 0.0) {
    residual[r++] = -pen * z[6];
  } else {
    residual[r++] = Scalar(0.0);
  }

  linear = -cost_.q_v * u[2];

  const Eigen::Index n_state = k > 0 ? 3 + 2 + 2 + (settings_.hard_obstacles ? kEgoDiscs * n_obs : 0) : 0;
  ineq.resize(6 + n_state);
  Eigen::Index c = 0;
  ineq[c++] = u[0] - limits_.jerk_max;
  ineq[c++] = limits_.jerk_min - u[0];
  ineq[c++] = u[1] - limits_.steer_rate_max;
  ineq[c++] = limits_.steer_rate_min - u[1];
  ineq[c++] = u[2] - limits_.path_speed_max;
  ineq[c++] = -u[2];
  if (k == 0) return;
  const Eigen::Matrix<Scalar, 3, 1> acc = accel_constraint_residuals(z, limits_);
  for (int i = 0; i < 3; ++i) ineq[c++] = acc[i];
  ineq[c++] = -z[3];
  ineq[c++] = z[3] - limits_.speed_max;
  const Eigen::Matrix<Scalar, 2, 1> bound = boundary_constraint(z, *path_, limits_.width);
  ineq[c++] = bound[0];
  ineq[c++] = bound[1];
  if (!settings_.hard_obstacles) return;
  const Extent ego{limits_.length, limits_.width};
  for (const ObstacleStep& ob : obs) {
    const Eigen::Matrix<Scalar, kEgoDiscs, 1> h = obstacle_constraint(z, ob, settings_.margin, ego);
    for (int i = 0; i < kEgoDiscs; ++i) ineq[c++] = h[i];
  }
}

void BranchMpccProblem::stage(int k, int s, const State& z, const Input& u, bool derivatives,
                              StageModel<kStateDim, kInputDim>& out) const {
  if (!derivatives) {
    double linear = 0.0;
    stage_terms<double>(k, s, z, u, out.residual, linear, out.ineq);
    out.linear = linear;
    return;
  }
  constexpr int dim = kStateDim + kInputDim;
  StateVector<Ad> za;
  InputVector<Ad> ua;
  for (int i = 0; i < kStateDim; ++i) za[i] = Ad(z[i], dim, i);
  for (int i = 0; i < kInputDim; ++i) ua[i] = Ad(u[i], dim, kStateDim + i);
  Eigen::Matrix<Ad, Eigen::Dynamic, 1> residual;
  Eigen::Matrix<Ad, Eigen::Dynamic, 1> ineq;
  Ad linear;
  stage_terms<Ad>(k, s, za, ua, residual, linear, ineq);
  out.residual.resize(residual.size());
  out.residual_jac.resize(residual.size(), dim);
  for (Eigen::Index i = 0; i < residual.size(); ++i) {
    out.residual[i] = residual[i].value();
    if (residual[i].derivatives().size() == dim) {
      out.residual_jac.row(i) = residual[i].derivatives().transpose();
    } else {
      out.residual_jac.row(i).setZero();
    }
  }
  out.linear = linear.value();
  out.linear_grad = linear.derivatives().size() == dim ? Eigen::Matrix<double, dim, 1>(linear.derivatives())
                                                        : Eigen::Matrix<double, dim, 1>::Zero();
  out.ineq.resize(ineq.size());
  out.ineq_jac.resize(ineq.size(), dim);
  for (Eigen::Index i = 0; i < ineq.size(); ++i) {
    out.ineq[i] = ineq[i].value();
    if (ineq[i].derivatives().size() == dim) {
      out.ineq_jac.row(i) = ineq[i].derivatives().transpose();
    } else {
      out.ineq_jac.row(i).setZero();
    }
  }
}

int PlanTree::dominant_scenario() const {
  int best = 0;
  for (int s = 1; s < static_cast<int>(tree.scenarios.size()); ++s) {
    if (tree.scenarios[static_cast<std::size_t>(s)].weight > tree.scenarios[static_cast<std::size_t>(best)].weight) best = s;
  }
  return best;
}

PlanTrajectory PlanTree::trajectory(int s) const {
  PlanTrajectory plan;
  for (int k = 0; k < horizon(); ++k) plan.states.push_back(state(s, k));
  return plan;
}

std::unique_ptr<BranchMpccProblem> build_nlp(const ScenarioTree& tree,
                                             const PredictionSet& predictions, const EgoState& z0,
                                             std::shared_ptr<const ReferencePath> path,
                                             const CostWeights& weights,
                                             const VehicleLimits& limits,
                                             const MpccSettings& settings) {
  return std::make_unique<BranchMpccProblem>(tree, predictions, z0, std::move(path), weights, limits,
                                             settings);
}

PlanTree solve(const BranchMpccProblem& nlp, const PlanTree* warm_start,
               const TreeSolverOptions& options) {
  TreeSolver<kStateDim, kInputDim> solver(options);
  PlanTree plan;
  plan.tree = nlp.tree();
  plan.solution = solver.solve(nlp, nlp.initial_state().vector(),
                               warm_start != nullptr ? &warm_start->solution : nullptr);
  for (std::size_t s = 0; s < plan.tree.scenarios.size(); ++s) {
    plan.tree.scenarios[s].weight = nlp.scenario_weight(static_cast<int>(s));
  }
  return plan;
}

}  // namespace bmpcc
