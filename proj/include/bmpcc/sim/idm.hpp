#pragma once

#include <array>
#include <limits>
#include <random>

namespace bmpcc::sim {

struct IdmParams {
  double v0 = 25.0;    ///< desired speed m/s
  double T = 1.5;      ///< time headway s
  double s0 = 2.0;     ///< minimum gap m
  double a = 1.5;      ///< maximum acceleration m/s^2
  double b = 2.0;      ///< comfortable deceleration m/s^2
  double delta = 4.0;  ///< acceleration exponent

  void validate() const;
};

inline constexpr double kFreeRoad = std::numeric_limits<double>::infinity();

/// Intelligent driver model acceleration. `gap` is bumper to bumper; pass
/// kFreeRoad without a leader. Throws std::domain_error if gap <= 0.
double idm_accel(const IdmParams& p, double v, double gap, double lead_speed);

/// Uniform sampling ranges, [lo, hi] per parameter.
struct IdmRanges {
  std::array<double, 2> v0{22.0, 30.0};
  std::array<double, 2> T{1.0, 2.0};
  std::array<double, 2> s0{1.5, 3.0};
  std::array<double, 2> a{1.0, 2.0};
  std::array<double, 2> b{1.5, 2.5};
  double delta = 4.0;

  void validate() const;
  IdmParams sample(std::mt19937_64& rng) const;
};

}  // namespace bmpcc::sim
