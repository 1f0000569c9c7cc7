#pragma once

#include "bmpcc/geometry.hpp"

#include <Eigen/Core>

#include <cmath>

namespace bmpcc {

inline constexpr int kStateDim = 7;
inline constexpr int kInputDim = 3;

template <class Scalar>
using StateVector = Eigen::Matrix<Scalar, kStateDim, 1>;
template <class Scalar>
using InputVector = Eigen::Matrix<Scalar, kInputDim, 1>;

/// Ego state z = [x, y, psi, v, a, delta, theta].
struct EgoState {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;
  double v = 0.0;
  double a = 0.0;
  double delta = 0.0;
  double theta = 0.0;

  [[nodiscard]] StateVector<double> vector() const { return {x, y, psi, v, a, delta, theta}; }
  static EgoState from_vector(const StateVector<double>& z) {
    return {z[0], z[1], z[2], z[3], z[4], z[5], z[6]};
  }
};

/// Control input u = [jerk, steering rate, virtual path speed].
struct ControlInput {
  double jerk = 0.0;
  double steer_rate = 0.0;
  double path_speed = 0.0;

  [[nodiscard]] InputVector<double> vector() const { return {jerk, steer_rate, path_speed}; }
  static ControlInput from_vector(const InputVector<double>& u) { return {u[0], u[1], u[2]}; }
};

struct VehicleLimits {
  double jerk_min = -15.0;
  double jerk_max = 15.0;
  double steer_rate_min = -0.6;
  double steer_rate_max = 0.6;
  double steer_min = -0.5;
  double steer_max = 0.5;
  double accel_lon_max = 3.0;
  double accel_lat_max = 4.0;
  double path_speed_max = 40.0;
  double speed_max = 25.0;
  double wheelbase = 2.7;
  double length = 4.5;
  double width = 2.0;

  void validate() const;
  [[nodiscard]] RectFootprint footprint(const EgoState& z) const {
    return {z.x, z.y, z.psi, length, width};
  }
};

/// Kinematic bicycle: z' = [v cos psi, v sin psi, v tan(delta)/l, a, j, delta', theta'].
template <class Scalar>
StateVector<Scalar> continuous_dynamics(const StateVector<Scalar>& z, const InputVector<Scalar>& u,
                                        double wheelbase) {
  using std::cos;
  using std::sin;
  using std::tan;
  StateVector<Scalar> dz;
  dz << z[3] * cos(z[2]), z[3] * sin(z[2]), z[3] * tan(z[5]) / wheelbase, z[4], u[0], u[1], u[2];
  return dz;
}

/// One classic fourth-order Runge-Kutta step with zero-order-hold input.
template <class Scalar>
StateVector<Scalar> rk4_step(const StateVector<Scalar>& z, const InputVector<Scalar>& u, double dt,
                             double wheelbase) {
  const StateVector<Scalar> k1 = continuous_dynamics<Scalar>(z, u, wheelbase);
  const StateVector<Scalar> k2 = continuous_dynamics<Scalar>(z + (0.5 * dt) * k1, u, wheelbase);
  const StateVector<Scalar> k3 = continuous_dynamics<Scalar>(z + (0.5 * dt) * k2, u, wheelbase);
  const StateVector<Scalar> k4 = continuous_dynamics<Scalar>(z + dt * k3, u, wheelbase);
  return z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

EgoState continuous_dynamics(const EgoState& z, const ControlInput& u, const VehicleLimits& limits);
EgoState discrete_step(const EgoState& z, const ControlInput& u, double dt,
                       const VehicleLimits& limits);

/// Lateral acceleration of the kinematic model, v^2 tan(delta) / l.
template <class Scalar>
Scalar lateral_acceleration(const StateVector<Scalar>& z, double wheelbase) {
  using std::tan;
  return z[3] * z[3] * tan(z[5]) / wheelbase;
}

/// Residuals g(z) <= 0: [friction ellipse, delta - delta_max, delta_min - delta].
template <class Scalar>
Eigen::Matrix<Scalar, 3, 1> accel_constraint_residuals(const StateVector<Scalar>& z,
                                                       const VehicleLimits& limits) {
  const Scalar lon = z[4] / limits.accel_lon_max;
  const Scalar lat = lateral_acceleration(z, limits.wheelbase) / limits.accel_lat_max;
  Eigen::Matrix<Scalar, 3, 1> g;
  g << lon * lon + lat * lat - 1.0, z[5] - limits.steer_max, limits.steer_min - z[5];
  return g;
}

Eigen::Vector3d accel_constraint_residuals(const EgoState& z, const VehicleLimits& limits);

}  // namespace bmpcc
