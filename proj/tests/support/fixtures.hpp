#pragma once

#include "bmpcc/path.hpp"
#include "bmpcc/prediction.hpp"
#include "bmpcc/scenario_selection.hpp"

#include <memory>
#include <numbers>
#include <string>

namespace fixture {

using namespace bmpcc;

inline constexpr double kHalfLane = 1.75;
inline constexpr double kTurnRadius = 6.0;

/// Southbound TP lane at x = -1.75 entering a crossing with the eastbound ego
/// lane at y = -1.75. The turn route bends right into the westbound lane.
inline std::shared_ptr<const ReferencePath> cross_route() {
  return std::make_shared<ReferencePath>(
      PathBuilder(-kHalfLane, 60.0, -0.5 * std::numbers::pi).line(150.0).build(0.5, kHalfLane, kHalfLane));
}

inline std::shared_ptr<const ReferencePath> turn_route() {
  return std::make_shared<ReferencePath>(PathBuilder(-kHalfLane, 60.0, -0.5 * std::numbers::pi)
                                             .line(60.0 - kHalfLane - kTurnRadius)
                                             .arc(kTurnRadius, -0.5 * std::numbers::pi)
                                             .line(100.0)
                                             .build(0.5, kHalfLane, kHalfLane));
}

inline ModePrediction mode(const std::string& label, const ReferencePath& route, const AccelProfile& profile,
                           double probability, int id, double tp_y = 20.0, double tp_speed = 8.0, int horizon = 40) {
  ModePrediction m = synth_rollout({0.0, -kHalfLane, tp_y, -0.5 * std::numbers::pi, tp_speed}, route, profile, horizon,
                                   0.1, PredictorConfig{});
  m.label = label;
  m.probability = probability;
  m.mode_id = id;
  return m;
}

/// Six predictions of one TP: four turning right, two crossing.
inline PredictionSet six_mode_intersection() {
  const auto turn = turn_route();
  const auto cross = cross_route();
  const double onset = 40.0 + 2.0;
  PredictionSet p;
  p.horizon = 40;
  p.dt = 0.1;
  TpPrediction tp;
  tp.tp_id = 1;
  tp.modes = {mode("turn", *turn, {-2.5, onset, 4.0}, 0.25, 0), mode("turn", *turn, {-2.0, onset, 4.0}, 0.2, 1),
              mode("cross", *cross, {}, 0.2, 2),
              mode("turn", *turn, {-3.0, onset, 4.0}, 0.15, 3), mode("turn", *turn, {-1.5, onset, 4.0}, 0.1, 4),
              mode("cross", *cross, {0.5, 0.0, 0.0, 12.0}, 0.1, 5)};
  p.tps.push_back(tp);
  return p;
}

/// Ego creeping east towards the crossing, stopping short of the TP lane.
inline PlanTrajectory creeping_ego_plan(int horizon = 40) {
  EgoState z;
  z.x = -7.0;
  z.y = -kHalfLane;
  z.v = 0.5;
  return constant_velocity_plan(z, horizon, 0.1, VehicleLimits{});
}

inline const Extent kEgo{4.5, 2.0};

}  // namespace fixture
