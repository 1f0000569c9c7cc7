#include "bmpcc/sim/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace bmpcc::sim {

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::intersection: return "intersection";
    case ScenarioKind::merging: return "merging";
    case ScenarioKind::custom: return "custom";
  }
  return "?";
}

ScenarioKind parse_scenario_kind(const std::string& name) {
  if (name == "intersection") return ScenarioKind::intersection;
  if (name == "merging") return ScenarioKind::merging;
  if (name == "custom") return ScenarioKind::custom;
  throw std::invalid_argument("unknown scenario '" + name + "' (expected intersection, merging or custom)");
}

void TpAgent::validate() const {
  if (!route) throw std::invalid_argument("TpAgent: missing route");
  if (!(length > 0.0 && width > 0.0)) throw std::invalid_argument("TpAgent: non-positive footprint");
  if (s < 0.0 || s > route->theta_max()) throw std::invalid_argument("TpAgent: start outside its route");
  if (hypotheses.empty() || hypotheses.size() != prior.size()) {
    throw std::invalid_argument("TpAgent: one prior weight per hypothesis required");
  }
  if (use_idm) idm.validate();
}

PathPose<double> TpAgent::pose() const { return route->query(std::clamp(s, 0.0, route->theta_max())); }

RectFootprint TpAgent::footprint() const {
  const PathPose<double> p = pose();
  return {p.x, p.y, p.psi, length, width};
}

TpObservation TpAgent::observe(double time) const {
  const PathPose<double> p = pose();
  return {time, p.x, p.y, p.psi, v};
}

void World::validate() const {
  if (!ego_path) throw std::invalid_argument("World: missing ego path");
  if (!(duration > 0.0)) throw std::invalid_argument("World: duration must be positive");
  if (ego.theta < 0.0 || ego.theta > ego_path->theta_max()) {
    throw std::invalid_argument("World: ego progress outside its path");
  }
  for (const TpAgent& tp : tps) tp.validate();
}

void IntersectionParams::validate() const {
  if (!(lane_width > 0.0 && ego_speed >= 0.0 && tp_speed >= 0.0 && turn_radius > 0.0 &&
        turn_decel > 0.0 && turn_speed >= 0.0 && duration > 0.0 && clear_distance > 0.0)) {
    throw std::invalid_argument("IntersectionParams: non-positive dimension, speed or duration");
  }
  if (!(turn_prior > 0.0 && turn_prior < 1.0)) throw std::invalid_argument("IntersectionParams: turn_prior outside (0, 1)");
  if (!(tp_distance > lane_width + turn_radius)) {
    throw std::invalid_argument("IntersectionParams: TP starts inside the turn");
  }
  if (!(ego_distance > 0.0 && turn_onset >= 0.0)) throw std::invalid_argument("IntersectionParams: negative distance");
}

World intersection_world(const IntersectionParams& params, bool tp_crosses) {
  params.validate();
  const double half = 0.5 * params.lane_width;
  const double cx = -half;
  const double cy = -half;
  constexpr double kLeadIn = 40.0;

  World world;
  world.kind = ScenarioKind::intersection;
  world.label = tp_crosses ? "intersection-cross" : "intersection-turn";
  world.duration = params.duration;
  world.ego_path = std::make_shared<ReferencePath>(
      PathBuilder(cx - params.ego_distance - kLeadIn, cy, 0.0)
          .line(kLeadIn + params.ego_distance + 200.0)
          .build(0.5, half, half));
  world.ego.x = cx - params.ego_distance;
  world.ego.y = cy;
  world.ego.v = params.ego_speed;
  world.ego.theta = kLeadIn;
  world.goal_theta = kLeadIn + params.ego_distance + params.clear_distance;

  const double south = -0.5 * std::numbers::pi;
  const double start_y = cy + params.tp_distance + kLeadIn;
  const double turn_y = half + params.turn_radius;
  auto cross = std::make_shared<ReferencePath>(
      PathBuilder(cx, start_y, south).line(kLeadIn + params.tp_distance + 150.0).build(0.5, half, half));
  auto turn = std::make_shared<ReferencePath>(PathBuilder(cx, start_y, south)
                                                  .line(start_y - turn_y)
                                                  .arc(params.turn_radius, -0.5 * std::numbers::pi)
                                                  .line(150.0)
                                                  .build(0.5, half, half));

  TpAgent tp;
  tp.id = 1;
  tp.s = kLeadIn;
  tp.v = params.tp_speed;
  AccelProfile braking;
  braking.accel = -params.turn_decel;
  braking.onset = kLeadIn + params.turn_onset;
  braking.speed_min = params.turn_speed;
  tp.hypotheses = {{"turn", turn, braking, params.turn_prior},
                   {"cross", cross, AccelProfile{}, 1.0 - params.turn_prior}};
  tp.prior = {params.turn_prior, 1.0 - params.turn_prior};
  tp.route = tp_crosses ? cross : turn;
  tp.script = tp_crosses ? AccelProfile{} : braking;
  tp.truth = tp_crosses ? "cross" : "turn";
  world.tps.push_back(tp);
  world.validate();
  return world;
}

void MergingParams::validate() const {
  if (!(lane_width > 0.0 && ramp_end - taper > ramp_start && taper > 0.0 && ego_speed >= 0.0 &&
        duration > 0.0)) {
    throw std::invalid_argument("MergingParams: inconsistent road geometry or duration");
  }
  if (tps_min < 0 || tps_max < tps_min) throw std::invalid_argument("MergingParams: bad TP count range");
  if (!(first_offset_min <= first_offset_max && spacing_min > 0.0 && spacing_min <= spacing_max)) {
    throw std::invalid_argument("MergingParams: bad placement ranges");
  }
  if (!(onset_min >= 0.0 && onset_min <= onset_max)) throw std::invalid_argument("MergingParams: bad onset range");
  if (!(yield_accel < 0.0 && accelerate_accel > 0.0 && speed_band > 0.0)) {
    throw std::invalid_argument("MergingParams: yield must brake and accelerate must speed up");
  }
  if (!(prior_yield > 0.0 && prior_maintain > 0.0 && prior_accelerate > 0.0)) {
    throw std::invalid_argument("MergingParams: intent priors must be positive");
  }
}

World merging_world(const MergingParams& params, const IdmRanges& idm, std::uint64_t seed) {
  params.validate();
  idm.validate();
  const double half = 0.5 * params.lane_width;
  const double lane = params.lane_width;
  constexpr double kLeadIn = 50.0;
  const double x0 = params.ramp_start - kLeadIn;

  World world;
  world.kind = ScenarioKind::merging;
  world.label = "merging";
  world.duration = params.duration;
  const double taper_start = params.ramp_end - params.taper;
  auto bounds = [=](double theta) {
    const double x = x0 + theta;
    double left = half + lane;
    if (x >= params.ramp_end) {
      left = half;
    } else if (x > taper_start) {
      left = half + lane * (params.ramp_end - x) / params.taper;
    }
    return std::pair<double, double>{left, half};
  };
  world.ego_path = std::make_shared<ReferencePath>(
      PathBuilder(x0, 0.0, 0.0).line(kLeadIn + params.ramp_end - params.ramp_start + 400.0).build(0.5, bounds, {half}));
  world.ego.x = params.ramp_start;
  world.ego.y = -lane;
  world.ego.v = params.ego_speed;
  world.ego.theta = kLeadIn;
  world.ramp_end_theta = params.ramp_end - x0;
  world.ramp_lane_contour = half;

  constexpr double kRouteBack = 400.0;
  const double route_x0 = params.ramp_start - kRouteBack;
  auto mainline = std::make_shared<ReferencePath>(
      PathBuilder(route_x0, 0.0, 0.0).line(kRouteBack + params.ramp_end + 1200.0).build(0.5, half, half));

  std::mt19937_64 rng(seed);
  auto uniform = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  const int count = std::uniform_int_distribution<int>(params.tps_min, params.tps_max)(rng);
  double x = params.ramp_start + uniform(params.first_offset_min, params.first_offset_max);
  const std::vector<double> prior = {params.prior_yield, params.prior_maintain, params.prior_accelerate};
  for (int i = 0; i < count; ++i) {
    if (i > 0) x -= uniform(params.spacing_min, params.spacing_max);
    TpAgent tp;
    tp.id = i + 1;
    tp.route = mainline;
    tp.s = x - route_x0;
    tp.idm = idm.sample(rng);
    tp.use_idm = true;
    tp.v = tp.idm.v0;

    AccelProfile yield{params.yield_accel, 0.0, std::max(tp.v - params.speed_band, 1.0)};
    AccelProfile accelerate{params.accelerate_accel, 0.0, 0.0, tp.v + params.speed_band};
    tp.hypotheses = {{"yield", mainline, yield, prior[0]},
                     {"maintain", mainline, AccelProfile{}, prior[1]},
                     {"accelerate", mainline, accelerate, prior[2]}};
    tp.prior = prior;

    const int truth = std::discrete_distribution<int>(prior.begin(), prior.end())(rng);
    const double onset = tp.s + tp.v * uniform(params.onset_min, params.onset_max);
    tp.truth = tp.hypotheses[static_cast<std::size_t>(truth)].label;
    tp.script = tp.hypotheses[static_cast<std::size_t>(truth)].profile;
    tp.script.onset = onset;
    world.tps.push_back(std::move(tp));
  }
  world.validate();
  return world;
}

World custom_world(std::shared_ptr<const ReferencePath> path, double speed, double duration) {
  World world;
  world.kind = ScenarioKind::custom;
  world.label = "custom";
  world.duration = duration;
  const PathPose<double> start = path->query(0.0);
  world.ego.x = start.x;
  world.ego.y = start.y;
  world.ego.psi = start.psi;
  world.ego.v = speed;
  world.ego_path = std::move(path);
  world.goal_theta = world.ego_path->theta_max() - 5.0;
  world.validate();
  return world;
}

}  // namespace bmpcc::sim
