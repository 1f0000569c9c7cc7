#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace bmpcc {

/// Raised when an operation is called with arguments that break its contract
/// (mismatched horizons, non-SPD covariances, malformed trees, ...).
class ContractError : public std::logic_error {
 public:
  explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double angle) {
  double wrapped = std::remainder(angle, 2.0 * std::numbers::pi);
  if (wrapped <= -std::numbers::pi) wrapped += 2.0 * std::numbers::pi;
  return wrapped;
}

template <class Scalar>
Eigen::Matrix<Scalar, 2, 2> rotation(const Scalar& angle) {
  using std::cos;
  using std::sin;
  Eigen::Matrix<Scalar, 2, 2> r;
  r << cos(angle), -sin(angle), sin(angle), cos(angle);
  return r;
}

/// Body dimensions without a pose.
struct Extent {
  double length = 4.5;
  double width = 2.0;
};

/// Oriented rectangle: center, heading of the long axis, full length and width.
struct RectFootprint {
  double center_x = 0.0;
  double center_y = 0.0;
  double heading = 0.0;
  double length = 1.0;
  double width = 1.0;

  [[nodiscard]] Vec2 center() const { return {center_x, center_y}; }
  [[nodiscard]] Vec2 axis_long() const { return {std::cos(heading), std::sin(heading)}; }
  [[nodiscard]] Vec2 axis_lat() const { return {-std::sin(heading), std::cos(heading)}; }
  [[nodiscard]] std::array<Vec2, 4> corners() const;
  /// Closed containment (boundary counts as inside).
  [[nodiscard]] bool contains(const Vec2& p) const;
  /// Point expressed in the rectangle frame.
  [[nodiscard]] Vec2 to_local(const Vec2& p) const;
  void validate() const;
};

/// Separating-axis test over the edge normals of both rectangles.
bool rect_overlap(const RectFootprint& a, const RectFootprint& b);

/// True iff the closed segment p1-p2 intersects the (closed) rectangle.
bool segment_hits_rect(const Vec2& p1, const Vec2& p2, const RectFootprint& r);

}  // namespace bmpcc
