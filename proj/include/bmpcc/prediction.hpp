#pragma once

#include "bmpcc/geometry.hpp"
#include "bmpcc/path.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace bmpcc {

/// Position Gaussian of one predicted step plus its deterministic heading and speed.
struct GaussianState {
  Vec2 mean = Vec2::Zero();
  Mat2 cov = Mat2::Identity();
  double heading = 0.0;
  double speed = 0.0;
};

struct ModePrediction {
  int mode_id = 0;
  double probability = 0.0;
  std::string label;
  std::vector<GaussianState> states;
};

struct TpPrediction {
  int tp_id = 0;
  double length = 4.5;
  double width = 2.0;
  /// Sorted by probability, most likely first (ties: lower mode_id first).
  std::vector<ModePrediction> modes;
};

/// Output contract of any multi-modal predictor: one Gaussian mixture per TP
/// and step, components shared across steps as trajectory modes.
struct PredictionSet {
  int horizon = 0;
  double dt = 0.1;
  std::vector<TpPrediction> tps;

  /// Throws ContractError on any violated invariant.
  void validate() const;
  [[nodiscard]] bool empty() const { return tps.empty(); }
};

inline constexpr double kSigmaMin = 1e-3;

/// Longitudinal speed schedule along a route: constant speed until the route
/// arclength reaches `onset`, then constant `accel` while the speed stays
/// inside [speed_min, speed_max].
struct AccelProfile {
  double accel = 0.0;
  double onset = 0.0;
  double speed_min = 0.0;
  double speed_max = std::numeric_limits<double>::infinity();

  /// Acceleration the profile commands at arclength s and speed v.
  [[nodiscard]] double commanded(double s, double v) const;
};

/// Advances (s, v) by dt under the profile, splitting the step where a speed
/// bound is reached.
void advance_profile(const AccelProfile& profile, double dt, double& s, double& v);

struct Intent {
  std::string label;
  std::shared_ptr<const ReferencePath> route;
  AccelProfile profile;
  double weight = 1.0;
};

struct TpObservation {
  double time = 0.0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double speed = 0.0;
};

struct TpScene {
  int tp_id = 0;
  double length = 4.5;
  double width = 2.0;
  std::vector<TpObservation> history;
  std::vector<Intent> intents;
};

struct Scene {
  std::vector<TpScene> tps;
};

struct PredictorConfig {
  double sigma_lon0 = 0.2;
  double sigma_lat0 = 0.2;
  double growth_lon = 0.08;
  double growth_lat = 0.03;
  int modes_per_tp = 6;
  double jitter_accel = 0.3;
  double min_intent_weight = 0.05;  ///< intents below this weight get no modes
};

/// Unimodal rollout of one intent along its route with heading-aligned
/// covariance growth. Probability is left at 1; `predict` assigns weights.
ModePrediction synth_rollout(const TpObservation& state, const ReferencePath& route,
                             const AccelProfile& profile, int horizon, double dt,
                             const PredictorConfig& config);

/// Synthetic multi-modal predictor. A TP with a single intent yields a single
/// mode; otherwise each TP gets max(modes_per_tp, #intents) modes allocated to
/// intents proportionally to their weights, extras being jittered variants.
/// Intents lighter than min_intent_weight are dropped unless they are the heaviest.
PredictionSet predict(const Scene& scene, int horizon, double dt, const PredictorConfig& config,
                      std::uint64_t seed);

/// Recursive Bayesian intent estimate from observed longitudinal acceleration.
class IntentFilter {
 public:
  IntentFilter() = default;
  IntentFilter(std::vector<double> prior, double accel_sigma, double floor);

  void update(std::span<const double> expected_accels, double observed_accel);
  [[nodiscard]] const std::vector<double>& weights() const { return weights_; }

 private:
  std::vector<double> weights_;
  double accel_sigma_ = 1.0;
  double floor_ = 0.0;
};

/// Line-delimited records: tp_id, mode_id, k, mu_x, mu_y, psi, v, s11, s12, s22, pi.
/// Horizon, dt and TP footprints travel in '#' header lines.
void write_prediction_records(const PredictionSet& predictions, std::ostream& out);
PredictionSet read_prediction_records(std::istream& in);

}  // namespace bmpcc
