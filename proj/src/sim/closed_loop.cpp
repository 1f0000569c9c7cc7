#include "bmpcc/sim/closed_loop.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>

namespace bmpcc::sim {

namespace {

std::uint64_t step_seed(std::uint64_t seed, int step) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(step) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

RectFootprint ego_footprint(const EgoState& z, const Extent& ego) { return {z.x, z.y, z.psi, ego.length, ego.width}; }

ControlInput fallback_input(const EgoState& z, const VehicleLimits& limits, double decel, double dt) {
  const double target = z.v > 0.5 ? -decel : 0.0;
  ControlInput u;
  u.jerk = std::clamp((target - z.a) / dt, limits.jerk_min, limits.jerk_max);
  u.steer_rate = std::clamp(-z.delta / dt, limits.steer_rate_min, limits.steer_rate_max);
  u.path_speed = std::max(z.v, 0.0);
  return u;
}

}  // namespace

std::string to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::success: return "success";
    case Outcome::aborted: return "aborted";
    case Outcome::collision: return "collision";
  }
  return "?";
}

OutcomeRule outcome_rule(const World& world, const VehicleLimits& limits) {
  OutcomeRule rule;
  rule.kind = world.kind;
  rule.ego = {limits.length, limits.width};
  rule.path = world.ego_path;
  rule.ramp_end_theta = world.ramp_end_theta;
  rule.ramp_lane_contour = world.ramp_lane_contour;
  return rule;
}

Outcome classify_outcome(const std::vector<StepRecord>& trace, const OutcomeRule& rule) {
  for (const StepRecord& rec : trace) {
    const RectFootprint ego = ego_footprint(rec.ego, rule.ego);
    for (const TpRecord& tp : rec.tps) {
      if (rect_overlap(ego, {tp.x, tp.y, tp.psi, tp.length, tp.width})) return Outcome::collision;
    }
  }
  if (rule.kind != ScenarioKind::merging || trace.empty() || !rule.path) return Outcome::success;
  auto on_ramp = [&](const EgoState& z, double& theta) {
    theta = rule.path->project({z.x, z.y});
    return contour_lag_errors(*rule.path, z.x, z.y, theta).contour > rule.ramp_lane_contour;
  };
  double theta = 0.0;
  for (const StepRecord& rec : trace) {
    if (on_ramp(rec.ego, theta) && theta >= rule.ramp_end_theta) return Outcome::aborted;
  }
  if (on_ramp(trace.back().ego, theta)) return Outcome::aborted;
  return Outcome::success;
}

std::vector<ObstacleStep> realized_obstacles(const std::vector<TpRecord>& tps) {
  std::vector<ObstacleStep> out;
  for (const TpRecord& tp : tps) out.push_back({tp.x, tp.y, tp.psi, tp.length, tp.width, tp.length, tp.width});
  return out;
}

double closed_loop_cost(const std::vector<StepRecord>& trace, const ReferencePath& path,
                        const CostWeights& weights) {
  double total = 0.0;
  for (const StepRecord& rec : trace) {
    if (!rec.executed) continue;
    total += running_cost(rec.ego, rec.input, path, weights, realized_obstacles(rec.tps));
  }
  return total;
}

double tp_accel(const TpAgent& tp, const std::vector<TpAgent>& all, const EgoState& ego,
                const World& world, const VehicleLimits& limits) {
  double a = 0.0;
  if (tp.s >= tp.script.onset && tp.script.accel != 0.0) {
    a = tp.script.commanded(tp.s, tp.v);
  } else if (tp.use_idm) {
    a = idm_accel(tp.idm, tp.v, kFreeRoad, 0.0);
  }
  if (!tp.use_idm) return a;

  double gap = kFreeRoad;
  double lead_speed = 0.0;
  for (const TpAgent& other : all) {
    if (other.id == tp.id || other.route != tp.route || other.s <= tp.s) continue;
    const double g = other.s - tp.s - 0.5 * (other.length + tp.length);
    if (g < gap) {
      gap = g;
      lead_speed = other.v;
    }
  }
  if (world.kind == ScenarioKind::merging) {
    const double se = tp.route->project({ego.x, ego.y});
    const ContourLag<double> e = contour_lag_errors(*tp.route, ego.x, ego.y, se);
    const PathPose<double> ref = tp.route->query(se);
    const bool in_lane = std::abs(e.contour) < 0.5 * (ref.d_lb + ref.d_rb) + 0.5 * limits.width;
    if (in_lane && se > tp.s) {
      const double g = se - tp.s - 0.5 * (limits.length + tp.length);
      if (g < gap) {
        gap = g;
        lead_speed = ego.v * std::cos(ego.psi - ref.psi);
      }
    }
  }
  if (!std::isinf(gap)) a = std::min(a, idm_accel(tp.idm, tp.v, std::max(gap, 0.1), lead_speed));
  return std::max(a, -9.0);
}

RunResult run_closed_loop(const World& world_in, const PlannerSetup& setup_in, std::uint64_t seed,
                          const ClosedLoopOptions& options) {
  world_in.validate();
  World world = world_in;
  PlannerSetup setup = setup_in;
  setup.path = world.ego_path;
  setup.config.validate();
  const PlannerConfig& config = setup.config;
  const double dt = config.dt;
  const Extent ego_extent{config.limits.length, config.limits.width};

  RunResult result;
  result.world = world.label;
  result.variant = setup.variant;

  std::vector<IntentFilter> filters;
  std::vector<std::deque<TpObservation>> history(world.tps.size());
  for (const TpAgent& tp : world.tps) filters.emplace_back(tp.prior, options.filter_sigma, options.filter_floor);

  EgoState z = world.ego;
  std::optional<PlanTree> previous;
  double time = 0.0;
  const int max_steps = static_cast<int>(std::ceil(world.duration / dt - 1e-9));
  for (int step = 0;; ++step) {
    StepRecord rec;
    rec.step = step;
    rec.time = time;
    rec.ego = z;
    bool collided = false;
    for (std::size_t i = 0; i < world.tps.size(); ++i) {
      const TpAgent& tp = world.tps[i];
      const PathPose<double> p = tp.pose();
      rec.tps.push_back({tp.id, p.x, p.y, p.psi, tp.v, tp.accel, tp.length, tp.width});
      for (double w : filters[i].weights()) rec.intent_weights.push_back(w);
      collided = collided || rect_overlap(ego_footprint(z, ego_extent), tp.footprint());
      history[i].push_back(tp.observe(time));
      if (static_cast<int>(history[i].size()) > options.history) history[i].pop_front();
    }
    if (collided || z.theta >= world.goal_theta || step >= max_steps) {
      result.trace.push_back(std::move(rec));
      break;
    }

    Scene scene;
    for (std::size_t i = 0; i < world.tps.size(); ++i) {
      const TpAgent& tp = world.tps[i];
      TpScene ts;
      ts.tp_id = tp.id;
      ts.length = tp.length;
      ts.width = tp.width;
      ts.history.assign(history[i].begin(), history[i].end());
      ts.intents = tp.hypotheses;
      for (std::size_t h = 0; h < ts.intents.size(); ++h) ts.intents[h].weight = filters[i].weights()[h];
      scene.tps.push_back(std::move(ts));
    }
    CycleResult cycle = plan_cycle(scene, z, previous ? &*previous : nullptr, setup, step_seed(seed, step));
    result.solve_ms.push_back(cycle.diagnostics.total_ms);

    ControlInput u = cycle.plan.input(0, 0);
    if (cycle.plan.status() == SolveStatus::infeasible) {
      u = fallback_input(z, config.limits, std::min(options.fallback_decel, config.limits.accel_lon_max), dt);
      rec.fallback = true;
      ++result.fallbacks;
    }
    rec.input = u;
    rec.executed = true;
    const CycleDiagnostics& d = cycle.diagnostics;
    rec.plan.status = to_string(d.status);
    rec.plan.iterations = d.iterations;
    rec.plan.kkt_residual = d.kkt_residual;
    rec.plan.max_violation = d.max_violation;
    rec.plan.solve_ms = d.solve_ms;
    rec.plan.total_ms = d.total_ms;
    rec.plan.branching_index = d.branching_index;
    rec.plan.clusters = d.clusters;
    rec.plan.joint_modes = d.joint_modes;
    rec.plan.weights = d.weights;
    if (options.record_branches) {
      for (int s = 0; s < cycle.plan.scenario_count(); ++s) {
        std::vector<std::array<double, 3>> branch;
        for (int k = 0; k < cycle.plan.horizon(); ++k) {
          const EgoState x = cycle.plan.state(s, k);
          branch.push_back({x.x, x.y, x.v});
        }
        rec.plan.branches.push_back(std::move(branch));
      }
    }
    rec.stage_cost = running_cost(z, u, *world.ego_path, config.weights, realized_obstacles(rec.tps));
    result.trace.push_back(std::move(rec));
    previous = std::move(cycle.plan);

    z = discrete_step(z, u, dt, config.limits);
    if (z.v < 0.0) {
      z.v = 0.0;
      z.a = std::max(z.a, 0.0);
    }
    std::vector<double> accels;
    for (const TpAgent& tp : world.tps) accels.push_back(tp_accel(tp, world.tps, result.trace.back().ego, world, config.limits));
    for (std::size_t i = 0; i < world.tps.size(); ++i) {
      TpAgent& tp = world.tps[i];
      std::vector<double> expected;
      for (const Intent& h : tp.hypotheses) expected.push_back(h.profile.commanded(tp.s, tp.v));
      const double v_next = std::max(tp.v + accels[i] * dt, 0.0);
      tp.s = std::min(tp.s + 0.5 * (tp.v + v_next) * dt, tp.route->theta_max());
      tp.accel = (v_next - tp.v) / dt;
      tp.v = v_next;
      filters[i].update(expected, tp.accel);
    }
    time = (step + 1) * dt;
  }

  result.outcome = classify_outcome(result.trace, outcome_rule(world, config.limits));
  result.cost = closed_loop_cost(result.trace, *world.ego_path, config.weights);
  result.min_accel = 0.0;
  for (const StepRecord& rec : result.trace) result.min_accel = std::min(result.min_accel, rec.ego.a);
  return result;
}

}  // namespace bmpcc::sim
