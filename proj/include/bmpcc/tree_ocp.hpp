#pragma once

// Scenario-tree optimal control: problem interface and a Gauss-Newton SQP
// solver with augmented-Lagrangian inequality handling.
//
// Tree layout for horizon N, S scenarios and branching index b:
//   inputs u_k   shared by all scenarios for k <= b, one per scenario after;
//   states z_k   shared for k <= b+1 (they are fixed by z_0 and the shared
//                inputs), one per scenario after.
// Every step k = 0..N-1 carries an input; the last one only enters its own
// stage cost. The dynamics must not depend on the scenario.

#include "bmpcc/geometry.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace bmpcc {

template <int Nz, int Nu>
struct StageModel {
  static constexpr int kDim = Nz + Nu;
  using Jacobian = Eigen::Matrix<double, Eigen::Dynamic, kDim>;

  /// Stage cost = ||residual||^2 + linear.
  Eigen::VectorXd residual;
  Jacobian residual_jac;
  double linear = 0.0;
  Eigen::Matrix<double, kDim, 1> linear_grad = Eigen::Matrix<double, kDim, 1>::Zero();
  /// Inequalities ineq <= 0.
  Eigen::VectorXd ineq;
  Jacobian ineq_jac;

  [[nodiscard]] double cost() const { return residual.squaredNorm() + linear; }
};

template <int Nz, int Nu>
class TreeOcp {
 public:
  using State = Eigen::Matrix<double, Nz, 1>;
  using Input = Eigen::Matrix<double, Nu, 1>;
  using StateJacobian = Eigen::Matrix<double, Nz, Nz>;
  using InputJacobian = Eigen::Matrix<double, Nz, Nu>;

  virtual ~TreeOcp() = default;

  [[nodiscard]] virtual int horizon() const = 0;
  [[nodiscard]] virtual int scenario_count() const = 0;
  [[nodiscard]] virtual int branching_index() const = 0;
  [[nodiscard]] virtual double scenario_weight(int s) const = 0;

  virtual State dynamics(int k, const State& z, const Input& u, StateJacobian* dz,
                         InputJacobian* du) const = 0;
  virtual void stage(int k, int s, const State& z, const Input& u, bool derivatives,
                     StageModel<Nz, Nu>& out) const = 0;
};

/// Index bookkeeping of the shared/per-scenario variable nodes.
class TreeLayout {
 public:
  TreeLayout(int horizon, int scenarios, int branching) : n_(horizon), s_(scenarios), b_(branching) {
    if (n_ < 2 || s_ < 1 || b_ < 0 || b_ > n_ - 1) throw ContractError("TreeLayout: inconsistent tree");
    state_id_.assign(static_cast<std::size_t>(n_), std::vector<int>(static_cast<std::size_t>(s_)));
    input_id_ = state_id_;
    int next_state = 0;
    int next_input = 0;
    for (int k = 0; k < n_; ++k) {
      const bool shared_state = k <= b_ + 1;
      const bool shared_input = k <= b_;
      int state_shared_id = shared_state ? next_state++ : -1;
      int input_shared_id = shared_input ? next_input++ : -1;
      for (int s = 0; s < s_; ++s) {
        state_id_[k][s] = shared_state ? state_shared_id : next_state++;
        input_id_[k][s] = shared_input ? input_shared_id : next_input++;
      }
    }
    state_nodes_ = next_state;
    input_nodes_ = next_input;
  }

  [[nodiscard]] int horizon() const { return n_; }
  [[nodiscard]] int scenarios() const { return s_; }
  [[nodiscard]] int branching() const { return b_; }
  [[nodiscard]] int state_node(int k, int s) const { return state_id_[k][s]; }
  [[nodiscard]] int input_node(int k, int s) const { return input_id_[k][s]; }
  [[nodiscard]] int state_node_count() const { return state_nodes_; }
  [[nodiscard]] int input_node_count() const { return input_nodes_; }
  [[nodiscard]] bool input_shared(int k) const { return k <= b_; }

 private:
  int n_, s_, b_;
  std::vector<std::vector<int>> state_id_;
  std::vector<std::vector<int>> input_id_;
  int state_nodes_ = 0;
  int input_nodes_ = 0;
};

struct TreeSolverOptions {
  int max_iterations = 50;
  double kkt_tolerance = 1e-4;
  /// Largest unslacked inequality violation still reported as feasible.
  double feasibility_tolerance = 0.05;
  double penalty_initial = 50.0;
  double penalty_max = 1e6;
  double penalty_growth = 10.0;
  int inner_iterations = 6;
  double regularization = 1e-8;
};

enum class SolveStatus { converged, max_iter, infeasible };

inline const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::infeasible: return "infeasible";
  }
  return "?";
}

/// Per-scenario trajectories; entries of shared nodes are identical copies.
template <int Nz, int Nu>
struct TreeSolution {
  using State = Eigen::Matrix<double, Nz, 1>;
  using Input = Eigen::Matrix<double, Nu, 1>;

  std::vector<std::vector<State>> states;   // [s][k], k = 0..N-1
  std::vector<std::vector<Input>> inputs;   // [s][k], k = 0..N-1
  std::vector<std::vector<Eigen::VectorXd>> multipliers;  // [s][k]
  std::vector<double> scenario_cost;        // unweighted sum of stage costs per scenario
  double cost = 0.0;                        // weighted objective
  double max_violation = 0.0;
  double kkt_residual = std::numeric_limits<double>::infinity();
  double penalty = 0.0;
  int iterations = 0;
  double wall_ms = 0.0;
  SolveStatus status = SolveStatus::max_iter;
};

/// Gauss-Newton SQP over the scenario tree. Each iteration linearizes the
/// dynamics and the stage residuals, solves the tree-structured QP with a
/// Riccati recursion (value functions of the branches are summed at the
/// branching node), and backtracks on an l1 merit function. Inequalities are
/// handled by an augmented Lagrangian whose multipliers are updated after a
/// few inner iterations.
template <int Nz, int Nu>
class TreeSolver {
 public:
  static constexpr int kDim = Nz + Nu;
  using Problem = TreeOcp<Nz, Nu>;
  using State = Eigen::Matrix<double, Nz, 1>;
  using Input = Eigen::Matrix<double, Nu, 1>;
  using Solution = TreeSolution<Nz, Nu>;

  explicit TreeSolver(TreeSolverOptions options = {}) : options_(options) {}

  Solution solve(const Problem& problem, const State& z0, const Solution* warm = nullptr);

  /// Objective gradient of stage (k, s) with respect to (z, u), for checks.
  static Eigen::Matrix<double, kDim, 1> stage_gradient(const StageModel<Nz, Nu>& m) {
    Eigen::Matrix<double, kDim, 1> g = m.linear_grad;
    if (m.residual.size() > 0) g += 2.0 * m.residual_jac.transpose() * m.residual;
    return g;
  }

 private:
  struct InputNode {
    int k = 0;
    int state = 0;  // state node this input acts on
    int next = -1;  // state node it drives (-1 at the last step)
    std::vector<int> scenarios;
    Eigen::Matrix<double, Nz, Nz> A;
    Eigen::Matrix<double, Nz, Nu> B;
    State defect;
    Eigen::Matrix<double, kDim, kDim> H;
    Eigen::Matrix<double, kDim, 1> g;
    Eigen::Matrix<double, Nu, Nz> K;
    Input kff;
  };

  struct Iterate {
    std::vector<State> z;
    std::vector<Input> u;
  };

  struct MeritParts {
    double objective = 0.0;  // weighted stage costs
    double augmented = 0.0;  // AL terms
    double defects = 0.0;    // l1 norm of dynamics defects
    double violation = 0.0;  // max unslacked inequality violation
    std::vector<double> scenario_cost;
  };

  MeritParts evaluate(const Problem& problem, const Iterate& w, bool linearize);
  Iterate rollout(const Problem& problem, const State& z0, Iterate w) const;

  TreeSolverOptions options_;
  std::optional<TreeLayout> layout_;
  std::vector<InputNode> inputs_;
  std::vector<std::vector<StageModel<Nz, Nu>>> stages_;  // [s][k]
  std::vector<std::vector<Eigen::VectorXd>> mult_;       // [s][k]
  double rho_ = 0.0;
};

template <int Nz, int Nu>
typename TreeSolver<Nz, Nu>::MeritParts TreeSolver<Nz, Nu>::evaluate(const Problem& problem,
                                                                    const Iterate& w,
                                                                    bool linearize) {
  const TreeLayout& layout = *layout_;
  MeritParts parts;
  parts.scenario_cost.assign(static_cast<std::size_t>(layout.scenarios()), 0.0);
  StageModel<Nz, Nu> scratch;
  for (InputNode& node : inputs_) {
    const State& z = w.z[static_cast<std::size_t>(node.state)];
    const Input& u = w.u[static_cast<std::size_t>(&node - inputs_.data())];
    if (node.next >= 0) {
      const State next = problem.dynamics(node.k, z, u, linearize ? &node.A : nullptr,
                                          linearize ? &node.B : nullptr);
      const State defect = next - w.z[static_cast<std::size_t>(node.next)];
      if (linearize) node.defect = defect;
      parts.defects += defect.template lpNorm<1>();
    }
    if (linearize) {
      node.H.setZero();
      node.g.setZero();
    }
    for (int s : node.scenarios) {
      StageModel<Nz, Nu>& m = linearize ? stages_[s][node.k] : scratch;
      problem.stage(node.k, s, z, u, linearize, m);
      const double weight = problem.scenario_weight(s);
      const double stage_cost = m.cost();
      parts.objective += weight * stage_cost;
      parts.scenario_cost[static_cast<std::size_t>(s)] += stage_cost;
      if (linearize) {
        if (m.residual.size() > 0) {
          node.H.noalias() += (2.0 * weight) * m.residual_jac.transpose() * m.residual_jac;
          node.g.noalias() += (2.0 * weight) * m.residual_jac.transpose() * m.residual;
        }
        node.g += weight * m.linear_grad;
      }
      Eigen::VectorXd& lam = mult_[s][node.k];
      if (lam.size() != m.ineq.size()) lam = Eigen::VectorXd::Zero(m.ineq.size());
      for (Eigen::Index c = 0; c < m.ineq.size(); ++c) {
        const double h = m.ineq[c];
        parts.violation = std::max(parts.violation, h);
        const double shifted = h + lam[c] / rho_;
        if (shifted > 0.0) {
          parts.augmented += 0.5 * rho_ * shifted * shifted;
          if (linearize) {
            node.H.noalias() += rho_ * m.ineq_jac.row(c).transpose() * m.ineq_jac.row(c);
            node.g.noalias() += (rho_ * shifted) * m.ineq_jac.row(c).transpose();
          }
        }
        parts.augmented -= 0.5 * lam[c] * lam[c] / rho_;
      }
    }
  }
  return parts;
}

template <int Nz, int Nu>
typename TreeSolver<Nz, Nu>::Iterate TreeSolver<Nz, Nu>::rollout(const Problem& problem,
                                                                 const State& z0,
                                                                 Iterate w) const {
  w.z[static_cast<std::size_t>(layout_->state_node(0, 0))] = z0;
  for (std::size_t i = 0; i < inputs_.size(); ++i) {
    const InputNode& node = inputs_[i];
    if (node.next < 0) continue;
    w.z[static_cast<std::size_t>(node.next)] =
        problem.dynamics(node.k, w.z[static_cast<std::size_t>(node.state)], w.u[i], nullptr, nullptr);
  }
  return w;
}

template <int Nz, int Nu>
typename TreeSolver<Nz, Nu>::Solution TreeSolver<Nz, Nu>::solve(const Problem& problem,
                                                                const State& z0,
                                                                const Solution* warm) {
  const auto start_time = std::chrono::steady_clock::now();
  const int horizon = problem.horizon();
  const int scenarios = problem.scenario_count();
  layout_.emplace(horizon, scenarios, problem.branching_index());
  const TreeLayout& layout = *layout_;

  // Input nodes in increasing k, so a forward sweep over the vector is causal.
  inputs_.assign(static_cast<std::size_t>(layout.input_node_count()), InputNode{});
  for (int k = 0; k < horizon; ++k) {
    for (int s = 0; s < scenarios; ++s) {
      InputNode& node = inputs_[static_cast<std::size_t>(layout.input_node(k, s))];
      node.k = k;
      node.state = layout.state_node(k, s);
      node.next = k + 1 < horizon ? layout.state_node(k + 1, s) : -1;
      if (node.scenarios.empty() || node.scenarios.back() != s) node.scenarios.push_back(s);
    }
  }
  stages_.assign(static_cast<std::size_t>(scenarios),
                 std::vector<StageModel<Nz, Nu>>(static_cast<std::size_t>(horizon)));
  mult_.assign(static_cast<std::size_t>(scenarios),
               std::vector<Eigen::VectorXd>(static_cast<std::size_t>(horizon)));

  // Initial iterate: warm start (scenario-wise, shared nodes from the first
  // scenario that owns them) or zero inputs, then closed by a rollout.
  Iterate w;
  w.z.assign(static_cast<std::size_t>(layout.state_node_count()), z0);
  w.u.assign(static_cast<std::size_t>(layout.input_node_count()), Input::Zero());
  rho_ = options_.penalty_initial;
  const bool use_warm = warm != nullptr && static_cast<int>(warm->inputs.size()) == scenarios &&
                        !warm->inputs.empty() &&
                        static_cast<int>(warm->inputs[0].size()) == horizon;
  if (use_warm) {
    std::vector<bool> seen_u(w.u.size(), false);
    std::vector<bool> seen_z(w.z.size(), false);
    for (int s = 0; s < scenarios; ++s) {
      for (int k = 0; k < horizon; ++k) {
        const auto ui = static_cast<std::size_t>(layout.input_node(k, s));
        const auto zi = static_cast<std::size_t>(layout.state_node(k, s));
        if (!seen_u[ui]) w.u[ui] = warm->inputs[s][k];
        if (!seen_z[zi] && warm->states.size() == warm->inputs.size()) w.z[zi] = warm->states[s][k];
        seen_u[ui] = seen_z[zi] = true;
        if (static_cast<int>(warm->multipliers.size()) == scenarios &&
            static_cast<int>(warm->multipliers[s].size()) == horizon) {
          mult_[s][k] = warm->multipliers[s][k];
        }
      }
    }
    if (warm->penalty > 0.0) rho_ = std::clamp(warm->penalty, options_.penalty_initial, options_.penalty_max);
  }
  w.z[static_cast<std::size_t>(layout.state_node(0, 0))] = z0;
  if (!use_warm || warm->states.size() != warm->inputs.size()) w = rollout(problem, z0, std::move(w));

  Solution out;
  double merit_weight = 10.0;
  double regularization = options_.regularization;
  double previous_violation = std::numeric_limits<double>::infinity();
  int inner = 0;
  Iterate best = w;
  double best_violation = std::numeric_limits<double>::infinity();
  double best_objective = std::numeric_limits<double>::infinity();
  double kkt = std::numeric_limits<double>::infinity();

  std::vector<Eigen::Matrix<double, Nz, Nz>> P(static_cast<std::size_t>(layout.state_node_count()));
  std::vector<State> p(static_cast<std::size_t>(layout.state_node_count()));
  std::vector<State> dz(static_cast<std::size_t>(layout.state_node_count()));
  std::vector<Input> du(inputs_.size());

  auto track_best = [&](const Iterate& candidate, const MeritParts& parts) {
    const double tol = options_.feasibility_tolerance;
    const bool cand_feasible = parts.violation <= tol;
    const bool best_feasible = best_violation <= tol;
    bool better;
    if (cand_feasible != best_feasible) {
      better = cand_feasible;
    } else if (cand_feasible) {
      better = parts.objective < best_objective;
    } else {
      better = parts.violation < best_violation;
    }
    if (better) {
      best = candidate;
      best_violation = parts.violation;
      best_objective = parts.objective;
    }
  };

  int iteration = 0;
  for (; iteration < options_.max_iterations; ++iteration) {
    MeritParts current = evaluate(problem, w, true);
    track_best(w, current);

    // Backward Riccati sweep over the tree.
    double stationarity = 0.0;
    bool factorized = false;
    for (int attempt = 0; attempt < 8 && !factorized; ++attempt) {
      for (auto& m : P) m.setZero();
      for (auto& v : p) v.setZero();
      stationarity = 0.0;
      factorized = true;
      for (auto it = inputs_.rbegin(); it != inputs_.rend(); ++it) {
        InputNode& node = *it;
        Eigen::Matrix<double, kDim, kDim> Q = node.H;
        Eigen::Matrix<double, kDim, 1> q = node.g;
        if (node.next >= 0) {
          const auto& Pn = P[static_cast<std::size_t>(node.next)];
          const State pn = p[static_cast<std::size_t>(node.next)] + Pn * node.defect;
          Eigen::Matrix<double, Nz, kDim> AB;
          AB << node.A, node.B;
          Q.noalias() += AB.transpose() * Pn * AB;
          q.noalias() += AB.transpose() * pn;
        }
        Eigen::Matrix<double, Nu, Nu> Quu = Q.template bottomRightCorner<Nu, Nu>();
        Quu.diagonal().array() += regularization;
        const Eigen::LLT<Eigen::Matrix<double, Nu, Nu>> llt(Quu);
        if (llt.info() != Eigen::Success) {
          factorized = false;
          regularization = std::max(regularization * 100.0, 1e-6);
          break;
        }
        const Eigen::Matrix<double, Nu, Nz> Quz = Q.template bottomLeftCorner<Nu, Nz>();
        const Input qu = q.template tail<Nu>();
        stationarity = std::max(stationarity, qu.template lpNorm<Eigen::Infinity>());
        node.K = -llt.solve(Quz);
        node.kff = -llt.solve(qu);
        if (node.k > 0) {
          auto& Ps = P[static_cast<std::size_t>(node.state)];
          Ps += Q.template topLeftCorner<Nz, Nz>() + Quz.transpose() * node.K;
          Ps = (0.5 * (Ps + Ps.transpose())).eval();
          p[static_cast<std::size_t>(node.state)] += q.template head<Nz>() + Quz.transpose() * node.kff;
        }
      }
    }
    const double max_defect = [&] {
      double d = 0.0;
      for (const InputNode& node : inputs_) {
        if (node.next >= 0) d = std::max(d, node.defect.template lpNorm<Eigen::Infinity>());
      }
      return d;
    }();
    kkt = std::max({stationarity, max_defect, std::max(current.violation, 0.0)});
    if (kkt <= options_.kkt_tolerance) {
      out.status = SolveStatus::converged;
      best = w;
      best_violation = current.violation;
      best_objective = current.objective;
      break;
    }
    if (!factorized) break;

    // Forward sweep of the linearized tree system.
    for (auto& v : dz) v.setZero();
    double directional = 0.0;
    double max_costate = 0.0;
    for (std::size_t i = 0; i < inputs_.size(); ++i) {
      const InputNode& node = inputs_[i];
      const State& dzs = dz[static_cast<std::size_t>(node.state)];
      du[i] = node.K * dzs + node.kff;
      directional += node.g.template head<Nz>().dot(dzs) + node.g.template tail<Nu>().dot(du[i]);
      if (node.next >= 0) {
        const auto ni = static_cast<std::size_t>(node.next);
        dz[ni] = node.A * dzs + node.B * du[i] + node.defect;
        max_costate = std::max(max_costate, (P[ni] * dz[ni] + p[ni]).template lpNorm<Eigen::Infinity>());
      }
    }
    merit_weight = std::max(merit_weight, 2.0 * max_costate);
    directional -= merit_weight * current.defects;
    const double merit0 = current.objective + current.augmented + merit_weight * current.defects;

    double alpha = 1.0;
    bool accepted = false;
    Iterate trial = w;
    MeritParts trial_parts;
    for (int ls = 0; ls < 12; ++ls) {
      for (std::size_t i = 0; i < w.z.size(); ++i) trial.z[i] = w.z[i] + alpha * dz[i];
      for (std::size_t i = 0; i < w.u.size(); ++i) trial.u[i] = w.u[i] + alpha * du[i];
      trial_parts = evaluate(problem, trial, false);
      const double merit = trial_parts.objective + trial_parts.augmented + merit_weight * trial_parts.defects;
      if (merit <= merit0 + 1e-4 * alpha * std::min(directional, 0.0) || (directional >= 0.0 && merit < merit0)) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (accepted) {
      w = std::move(trial);
      regularization = std::max(regularization * 0.1, options_.regularization);
    } else {
      regularization = std::max(regularization * 100.0, 1e-4);
    }
    ++inner;

    // Augmented-Lagrangian outer update.
    const bool inner_done = stationarity <= std::max(options_.kkt_tolerance, 1e-2) || !accepted ||
                            inner >= options_.inner_iterations;
    if (inner_done) {
      const MeritParts now = accepted ? trial_parts : current;
      for (int s = 0; s < scenarios; ++s) {
        for (int k = 0; k < horizon; ++k) {
          // Multipliers need the inequality values at the new iterate.
          StageModel<Nz, Nu> m;
          const auto zi = static_cast<std::size_t>(layout.state_node(k, s));
          const auto ui = static_cast<std::size_t>(layout.input_node(k, s));
          problem.stage(k, s, w.z[zi], w.u[ui], false, m);
          Eigen::VectorXd& lam = mult_[s][k];
          if (lam.size() != m.ineq.size()) lam = Eigen::VectorXd::Zero(m.ineq.size());
          lam = (lam + rho_ * m.ineq).cwiseMax(0.0);
        }
      }
      if (now.violation > 0.25 * previous_violation) rho_ = std::min(rho_ * options_.penalty_growth, options_.penalty_max);
      previous_violation = now.violation;
      inner = 0;
    }
  }

  // Close the remaining defects by simulating the returned inputs.
  Iterate final_w = rollout(problem, z0, best);
  const MeritParts final_parts = evaluate(problem, final_w, false);

  out.iterations = iteration;
  out.kkt_residual = kkt;
  out.penalty = rho_;
  out.cost = final_parts.objective;
  out.max_violation = std::max(final_parts.violation, 0.0);
  out.scenario_cost = final_parts.scenario_cost;
  if (out.status != SolveStatus::converged) {
    out.status = out.max_violation <= options_.feasibility_tolerance ? SolveStatus::max_iter
                                                                     : SolveStatus::infeasible;
  }
  out.states.assign(static_cast<std::size_t>(scenarios), std::vector<State>(static_cast<std::size_t>(horizon)));
  out.inputs.assign(static_cast<std::size_t>(scenarios), std::vector<Input>(static_cast<std::size_t>(horizon)));
  out.multipliers = mult_;
  for (int s = 0; s < scenarios; ++s) {
    for (int k = 0; k < horizon; ++k) {
      out.states[s][k] = final_w.z[static_cast<std::size_t>(layout.state_node(k, s))];
      out.inputs[s][k] = final_w.u[static_cast<std::size_t>(layout.input_node(k, s))];
    }
  }
  out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_time).count();
  return out;
}

}  // namespace bmpcc
