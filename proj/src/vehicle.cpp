#include "bmpcc/vehicle.hpp"

#include <stdexcept>

namespace bmpcc {

void VehicleLimits::validate() const {
  auto ordered = [](double lo, double hi, const char* name) {
    if (!(lo < hi)) throw std::invalid_argument(std::string("VehicleLimits: ") + name + " min >= max");
  };
  ordered(jerk_min, jerk_max, "jerk");
  ordered(steer_rate_min, steer_rate_max, "steer_rate");
  ordered(steer_min, steer_max, "steer");
  if (!(accel_lon_max > 0.0) || !(accel_lat_max > 0.0) || !(wheelbase > 0.0) || !(length > 0.0) ||
      !(width > 0.0) || !(path_speed_max > 0.0) || !(speed_max > 0.0)) {
    throw std::invalid_argument("VehicleLimits: accelerations, wheelbase and dimensions must be positive");
  }
}

EgoState continuous_dynamics(const EgoState& z, const ControlInput& u, const VehicleLimits& limits) {
  return EgoState::from_vector(continuous_dynamics<double>(z.vector(), u.vector(), limits.wheelbase));
}

EgoState discrete_step(const EgoState& z, const ControlInput& u, double dt,
                       const VehicleLimits& limits) {
  if (!(dt > 0.0)) throw std::invalid_argument("discrete_step: dt must be positive");
  return EgoState::from_vector(rk4_step<double>(z.vector(), u.vector(), dt, limits.wheelbase));
}

Eigen::Vector3d accel_constraint_residuals(const EgoState& z, const VehicleLimits& limits) {
  return accel_constraint_residuals<double>(z.vector(), limits);
}

}  // namespace bmpcc
