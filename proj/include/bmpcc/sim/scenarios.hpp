#pragma once

#include "bmpcc/geometry.hpp"
#include "bmpcc/path.hpp"
#include "bmpcc/prediction.hpp"
#include "bmpcc/sim/idm.hpp"
#include "bmpcc/vehicle.hpp"

#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace bmpcc::sim {

enum class ScenarioKind { intersection, merging, custom };

std::string to_string(ScenarioKind kind);
/// Throws std::invalid_argument for unknown names.
ScenarioKind parse_scenario_kind(const std::string& name);

/// Traffic participant moving along its route by arclength.
struct TpAgent {
  int id = 0;
  double length = 4.5;
  double width = 2.0;
  std::shared_ptr<const ReferencePath> route;
  double s = 0.0;
  double v = 0.0;
  double accel = 0.0;  ///< applied during the last step
  IdmParams idm;
  bool use_idm = false;
  /// Behaviour actually executed. Before the onset the agent follows IDM
  /// (or holds its speed without IDM); afterwards the profile's command.
  AccelProfile script;
  /// Hypotheses offered to the predictor, with the prior of each.
  std::vector<Intent> hypotheses;
  std::vector<double> prior;
  std::string truth;

  void validate() const;
  [[nodiscard]] PathPose<double> pose() const;
  [[nodiscard]] RectFootprint footprint() const;
  [[nodiscard]] TpObservation observe(double time) const;
};

struct World {
  ScenarioKind kind = ScenarioKind::custom;
  std::string label;
  std::shared_ptr<const ReferencePath> ego_path;
  EgoState ego;
  std::vector<TpAgent> tps;
  double duration = 15.0;
  /// Run ends once the ego progress passes this arclength.
  double goal_theta = std::numeric_limits<double>::infinity();
  /// Merging: ramp end and the contouring error separating ramp and mainline.
  double ramp_end_theta = std::numeric_limits<double>::infinity();
  double ramp_lane_contour = std::numeric_limits<double>::infinity();

  void validate() const;
};

struct IntersectionParams {
  double lane_width = 3.5;
  double ego_speed = 10.0;
  double ego_distance = 45.0;   ///< ego center to the conflict point
  double tp_speed = 9.0;
  double tp_distance = 40.0;    ///< TP center to the conflict point
  double turn_radius = 6.0;
  double turn_onset = 13.0;     ///< distance the turning TP travels before braking
  double turn_decel = 2.5;
  double turn_speed = 4.0;
  double turn_prior = 0.65;
  double duration = 15.0;
  double clear_distance = 15.0; ///< past the conflict point

  void validate() const;
};

/// Ego heading east, one TP heading south that either turns right (into the
/// westbound lane, never entering the ego lane) or crosses the ego lane.
World intersection_world(const IntersectionParams& params, bool tp_crosses);

struct MergingParams {
  double lane_width = 3.75;
  double ramp_start = 0.0;      ///< ego start x
  double ramp_end = 200.0;
  double taper = 20.0;
  double ego_speed = 20.0;
  double duration = 12.0;
  int tps_min = 2;
  int tps_max = 4;
  double first_offset_min = -35.0;  ///< first TP x relative to the ego
  double first_offset_max = 25.0;
  double spacing_min = 22.0;        ///< center distance between consecutive TPs
  double spacing_max = 40.0;
  double yield_accel = -1.5;
  double accelerate_accel = 1.0;
  double speed_band = 5.0;
  double onset_min = 0.5;           ///< seconds
  double onset_max = 4.0;
  double prior_yield = 0.3;
  double prior_maintain = 0.4;
  double prior_accelerate = 0.3;

  void validate() const;
};

/// Ramp (right of the mainline lane) merging into a single mainline lane with
/// 2-4 IDM vehicles, sampled from `seed`.
World merging_world(const MergingParams& params, const IdmRanges& idm, std::uint64_t seed);

/// Ego alone on a custom path.
World custom_world(std::shared_ptr<const ReferencePath> path, double speed, double duration);

}  // namespace bmpcc::sim
