#include "bmpcc/planner.hpp"

#include <algorithm>
#include <chrono>
#include <iterator>
#include <limits>
#include <tuple>
#include <cstdlib>
#include <stdexcept>

namespace bmpcc {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

struct VariantInfo {
  PlannerVariant variant;
  const char* name;
};

constexpr VariantInfo kVariants[] = {
    {PlannerVariant::full, "full"},       {PlannerVariant::cmpcc, "cmpcc"},
    {PlannerVariant::scmpcc, "scmpcc"},   {PlannerVariant::no_ss2, "no_ss2"},
    {PlannerVariant::no_ss3, "no_ss3"},   {PlannerVariant::no_ss4, "no_ss4"},
    {PlannerVariant::no_dp, "no_dp"},
};

using Solution = TreeSolution<kStateDim, kInputDim>;

// Rollout that drives the acceleration to `target` while straightening the wheel.
void profile_rollout(const EgoState& z0, double target, const PlannerConfig& config,
                     std::vector<Solution::Input>& inputs, std::vector<Solution::State>& states) {
  const int n = config.horizon;
  const VehicleLimits& lim = config.limits;
  inputs.assign(static_cast<std::size_t>(n), Solution::Input::Zero());
  states.assign(static_cast<std::size_t>(n), z0.vector());
  EgoState z = z0;
  for (int k = 0; k < n; ++k) {
    const double want = z.v > 0.5 || target >= 0.0 ? target : 0.0;
    ControlInput u;
    u.jerk = std::clamp((want - z.a) / config.dt, lim.jerk_min, lim.jerk_max);
    u.steer_rate = std::clamp(-z.delta / config.dt, lim.steer_rate_min, lim.steer_rate_max);
    u.path_speed = std::clamp(z.v, 0.0, lim.path_speed_max);
    states[static_cast<std::size_t>(k)] = z.vector();
    inputs[static_cast<std::size_t>(k)] = u.vector();
    z = discrete_step(z, u, config.dt, lim);
    z.v = std::max(z.v, 0.0);
  }
}

// Summed positive inequality residual of one branch, and its cost.
std::pair<double, double> branch_score(const BranchMpccProblem& nlp, int s,
                                       const std::vector<Solution::Input>& inputs,
                                       const std::vector<Solution::State>& states) {
  StageModel<kStateDim, kInputDim> m;
  double violation = 0.0;
  double cost = 0.0;
  for (int k = 0; k < nlp.horizon(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    nlp.stage(k, s, states[i], inputs[i], false, m);
    violation += m.ineq.cwiseMax(0.0).sum();
    cost += m.cost();
  }
  return {violation, cost};
}

// Per branch, the shifted previous solution competes with braking and
// speed-holding rollouts; a changed tree often makes the shifted plan drive
// through a new obstacle where the constraint gradients vanish.
Solution initial_guess(const BranchMpccProblem& nlp, const PlanTree* previous, const ScenarioTree& tree,
                       const EgoState& z0, const PlannerConfig& config) {
  Solution warm = shifted_warm_start(previous, tree, z0, config);
  const bool has_states = warm.states.size() == warm.inputs.size();
  if (!has_states) warm.states.assign(warm.inputs.size(), {});
  warm.multipliers.resize(warm.inputs.size());
  const double profiles[] = {0.0, 1.0, -1.5, -config.limits.accel_lon_max};
  std::vector<std::vector<Solution::Input>> cand_u(std::size(profiles));
  std::vector<std::vector<Solution::State>> cand_z(std::size(profiles));
  for (std::size_t c = 0; c < std::size(profiles); ++c) profile_rollout(z0, profiles[c], config, cand_u[c], cand_z[c]);
  for (int s = 0; s < nlp.scenario_count(); ++s) {
    const auto si = static_cast<std::size_t>(s);
    double best_violation = std::numeric_limits<double>::infinity();
    double best_cost = best_violation;
    int best = -1;
    if (has_states) {
      std::tie(best_violation, best_cost) = branch_score(nlp, s, warm.inputs[si], warm.states[si]);
    }
    for (std::size_t c = 0; c < cand_u.size(); ++c) {
      const auto [violation, cost] = branch_score(nlp, s, cand_u[c], cand_z[c]);
      const bool clearly_less = violation < best_violation - 0.05;
      const bool tie_cheaper = violation <= best_violation + 1e-9 && cost < best_cost && best >= 0;
      if (clearly_less || tie_cheaper || (!has_states && best < 0)) {
        best = static_cast<int>(c);
        best_violation = violation;
        best_cost = cost;
      }
    }
    if (best >= 0) {
      warm.inputs[si] = cand_u[static_cast<std::size_t>(best)];
      warm.states[si] = cand_z[static_cast<std::size_t>(best)];
      warm.multipliers[si].clear();
    }
  }
  return warm;
}

}  // namespace

std::string to_string(PlannerVariant variant) {
  for (const VariantInfo& info : kVariants) {
    if (info.variant == variant) return info.name;
  }
  return "?";
}

PlannerVariant parse_variant(const std::string& name) {
  for (const VariantInfo& info : kVariants) {
    if (name == info.name) return info.variant;
  }
  throw std::invalid_argument("unknown planner variant '" + name +
                              "' (expected full, cmpcc, scmpcc, no_ss2, no_ss3, no_ss4 or no_dp)");
}

std::vector<PlannerVariant> all_variants() {
  std::vector<PlannerVariant> out;
  for (const VariantInfo& info : kVariants) out.push_back(info.variant);
  return out;
}

void PlannerConfig::validate() const {
  if (horizon < 2) throw std::invalid_argument("PlannerConfig: horizon must be >= 2");
  if (!(dt > 0.0)) throw std::invalid_argument("PlannerConfig: dt must be positive");
  if (max_scenarios < 1) throw std::invalid_argument("PlannerConfig: max_scenarios must be >= 1");
  if (!(lambda >= 0.0)) throw std::invalid_argument("PlannerConfig: lambda must be non-negative");
  if (solver.max_iterations < 1 || !(solver.kkt_tolerance > 0.0)) {
    throw std::invalid_argument("PlannerConfig: solver needs a positive iteration cap and tolerance");
  }
  postponing.validate();
  weights.validate();
  limits.validate();
}

PlanTrajectory assumed_plan(const PlanTree* previous, const EgoState& z0, const PlannerConfig& config) {
  if (previous == nullptr || previous->horizon() != config.horizon) {
    return constant_velocity_plan(z0, config.horizon, config.dt, config.limits);
  }
  const int s = previous->dominant_scenario();
  PlanTrajectory plan;
  plan.states.push_back(z0);
  for (int k = 2; k < config.horizon; ++k) plan.states.push_back(previous->state(s, k));
  const EgoState& last = plan.states.back();
  plan.states.push_back(discrete_step(last, {0.0, 0.0, last.v}, config.dt, config.limits));
  return plan;
}

ScenarioTree variant_tree(PlannerVariant variant, const PredictionSet& predictions,
                          const PlanTrajectory& plan, const PlannerConfig& config,
                          CycleDiagnostics& diagnostics) {
  ScenarioTree tree;
  const int last = config.horizon - 1;
  diagnostics.max_cep.clear();
  diagnostics.clusters = 0;
  const Extent ego{config.limits.length, config.limits.width};
  if (predictions.tps.empty()) {
    tree = most_probable_scenarios(predictions, 1);
  } else if (variant == PlannerVariant::full || variant == PlannerVariant::no_dp) {
    const auto clusters = cluster_modes(predictions, plan, ego);
    const RiskReport risk = assess_risk(predictions, plan, ego, config.lambda);
    diagnostics.clusters = static_cast<int>(clusters.size());
    for (std::size_t o = 0; o < predictions.tps.size(); ++o) diagnostics.max_cep.push_back(risk.max_cep(o));
    tree = select_scenarios(predictions, clusters, risk, config.lambda, config.max_scenarios);
    tree.horizon = config.horizon;
    if (variant == PlannerVariant::full) {
      tree.branching_index = branching_time(tree, predictions, risk, config.postponing).index;
    }
  } else {
    int count = 1;
    switch (variant) {
      case PlannerVariant::scmpcc: count = 5; break;
      case PlannerVariant::no_ss2: count = 2; break;
      case PlannerVariant::no_ss3: count = 3; break;
      case PlannerVariant::no_ss4: count = 4; break;
      default: break;
    }
    tree = most_probable_scenarios(predictions, count);
    if (variant == PlannerVariant::scmpcc) tree.branching_index = last;
  }
  tree.horizon = config.horizon;
  tree.branching_index = std::clamp(tree.branching_index, 0, last);
  if (tree.scenarios.size() == 1 && variant != PlannerVariant::scmpcc) tree.branching_index = 0;
  return tree;
}

TreeSolution<kStateDim, kInputDim> shifted_warm_start(const PlanTree* previous, const ScenarioTree& tree,
                                                      const EgoState& z0, const PlannerConfig& config) {
  using Solution = TreeSolution<kStateDim, kInputDim>;
  const int n = config.horizon;
  const auto scenarios = tree.scenarios.size();
  Solution warm;
  warm.inputs.assign(scenarios, std::vector<Solution::Input>(static_cast<std::size_t>(n)));
  if (previous == nullptr || previous->horizon() != n || previous->scenario_count() == 0) {
    for (auto& branch : warm.inputs) {
      for (auto& u : branch) u = ControlInput{0.0, 0.0, std::max(z0.v, 0.0)}.vector();
    }
    return warm;
  }
  const Solution& prev = previous->solution;
  warm.states.assign(scenarios, std::vector<Solution::State>(static_cast<std::size_t>(n)));
  warm.multipliers.assign(scenarios, std::vector<Eigen::VectorXd>(static_cast<std::size_t>(n)));
  for (std::size_t s = 0; s < scenarios; ++s) {
    const int mode = tree.scenarios[s].joint_mode;
    std::size_t source = 0;
    int best_gap = -1;
    for (std::size_t p = 0; p < previous->tree.scenarios.size() && p < prev.states.size(); ++p) {
      const int gap = std::abs(previous->tree.scenarios[p].joint_mode - mode);
      if (best_gap < 0 || gap < best_gap) {
        best_gap = gap;
        source = p;
      }
    }
    for (int k = 0; k < n; ++k) {
      const auto from = static_cast<std::size_t>(std::min(k + 1, n - 1));
      const auto to = static_cast<std::size_t>(k);
      warm.inputs[s][to] = prev.inputs[source][from];
      warm.states[s][to] = prev.states[source][from];
      if (source < prev.multipliers.size()) warm.multipliers[s][to] = prev.multipliers[source][from];
    }
    warm.states[s][0] = z0.vector();
    const auto tail = static_cast<std::size_t>(n - 1);
    warm.states[s][tail] = rk4_step<double>(warm.states[s][tail - 1], warm.inputs[s][tail - 1], config.dt,
                                            config.limits.wheelbase);
  }
  return warm;
}

CycleResult plan_cycle(const PredictionSet& predictions, const EgoState& z0, const PlanTree* previous,
                       const PlannerSetup& setup) {
  const auto start = Clock::now();
  const PlannerConfig& config = setup.config;
  CycleResult result;
  result.predictions = predictions;

  const PlanTrajectory plan = assumed_plan(previous, z0, config);
  const ScenarioTree tree = variant_tree(setup.variant, predictions, plan, config, result.diagnostics);
  result.diagnostics.select_ms = elapsed_ms(start);

  MpccSettings settings = config.mpcc;
  settings.dt = config.dt;
  const auto nlp = build_nlp(tree, predictions, z0, setup.path, config.weights, config.limits, settings);
  PlanTree warm;
  warm.tree = tree;
  warm.solution = initial_guess(*nlp, previous, tree, z0, config);
  const auto solve_start = Clock::now();
  result.plan = solve(*nlp, &warm, config.solver);
  result.diagnostics.solve_ms = elapsed_ms(solve_start);

  CycleDiagnostics& d = result.diagnostics;
  d.branching_index = tree.branching_index;
  for (const Scenario& s : result.plan.tree.scenarios) {
    d.joint_modes.push_back(s.joint_mode);
    d.weights.push_back(s.weight);
  }
  d.status = result.plan.status();
  d.iterations = result.plan.solution.iterations;
  d.kkt_residual = result.plan.solution.kkt_residual;
  d.max_violation = result.plan.solution.max_violation;
  d.total_ms = elapsed_ms(start);
  return result;
}

CycleResult plan_cycle(const Scene& scene, const EgoState& z0, const PlanTree* previous,
                       const PlannerSetup& setup, std::uint64_t seed) {
  const auto start = Clock::now();
  const PredictionSet predictions =
      predict(scene, setup.config.horizon, setup.config.dt, setup.config.predictor, seed);
  const double predict_ms = elapsed_ms(start);
  CycleResult result = plan_cycle(predictions, z0, previous, setup);
  result.diagnostics.predict_ms = predict_ms;
  result.diagnostics.total_ms += predict_ms;
  return result;
}

}  // namespace bmpcc
