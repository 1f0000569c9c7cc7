#pragma once

#include "bmpcc/geometry.hpp"
#include "bmpcc/scalar.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bmpcc {

/// One node of an arclength-parameterized reference path. `d_lb` bounds the
/// side of positive contouring error, `d_rb` the side of negative contouring
/// error (see `contour_lag_errors` for the sign convention).
struct PathSample {
  double theta = 0.0;
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;
  double d_lb = 0.0;
  double d_rb = 0.0;
};

template <class Scalar>
struct PathPose {
  Scalar x;
  Scalar y;
  Scalar psi;
  Scalar d_lb;
  Scalar d_rb;
};

template <class Scalar>
struct ContourLag {
  Scalar contour;
  Scalar lag;
};

/// Piecewise-linear reference path. Immutable once constructed.
class ReferencePath {
 public:
  static constexpr double kDefaultMaxSpacing = 0.5;

  explicit ReferencePath(std::vector<PathSample> samples, std::vector<double> lane_markers = {},
                         double ds_max = kDefaultMaxSpacing);

  [[nodiscard]] double theta_max() const { return samples_.back().theta; }
  [[nodiscard]] const std::vector<PathSample>& samples() const { return samples_; }
  [[nodiscard]] const std::vector<double>& lane_markers() const { return lane_markers_; }

  /// Interpolated pose and boundaries. Throws std::domain_error outside [0, theta_max].
  [[nodiscard]] PathPose<double> query(double theta) const;

  /// Same interpolation, usable with dual numbers. Arguments outside the
  /// range are clamped (callers add their own overshoot penalty).
  template <class Scalar>
  [[nodiscard]] PathPose<Scalar> evaluate(const Scalar& theta) const;

  /// Arclength of the point on the path nearest to `p`.
  [[nodiscard]] double project(const Vec2& p) const;

  /// Returns a copy with different lane-marker offsets.
  [[nodiscard]] ReferencePath with_lane_markers(std::vector<double> markers) const;

 private:
  [[nodiscard]] std::size_t segment(double theta) const;

  std::vector<PathSample> samples_;
  std::vector<double> lane_markers_;
};

template <class Scalar>
PathPose<Scalar> ReferencePath::evaluate(const Scalar& theta) const {
  const double t = value_of(theta);
  if (t <= 0.0) {
    const PathSample& s = samples_.front();
    return {Scalar(s.x), Scalar(s.y), Scalar(s.psi), Scalar(s.d_lb), Scalar(s.d_rb)};
  }
  if (t >= theta_max()) {
    const PathSample& s = samples_.back();
    return {Scalar(s.x), Scalar(s.y), Scalar(s.psi), Scalar(s.d_lb), Scalar(s.d_rb)};
  }
  const std::size_t i = segment(t);
  const PathSample& a = samples_[i];
  const PathSample& b = samples_[i + 1];
  if (t == a.theta) {
    return {Scalar(a.x), Scalar(a.y), Scalar(a.psi), Scalar(a.d_lb), Scalar(a.d_rb)};
  }
  const Scalar w = (theta - a.theta) / (b.theta - a.theta);
  const double dpsi = wrap_angle(b.psi - a.psi);
  return {a.x + w * (b.x - a.x), a.y + w * (b.y - a.y), a.psi + w * dpsi,
          a.d_lb + w * (b.d_lb - a.d_lb), a.d_rb + w * (b.d_rb - a.d_rb)};
}

/// Contouring and lag error of point (x, y) against the path at arclength
/// theta (no projection: theta is the optimizer's progress state).
///   e_c =  sin(psi_ref) dx - cos(psi_ref) dy
///   e_l = -cos(psi_ref) dx - sin(psi_ref) dy
/// A point to the left of the direction of travel has negative e_c; a point
/// behind the reference has positive e_l.
template <class Scalar>
ContourLag<Scalar> contour_lag_errors(const PathPose<Scalar>& ref, const Scalar& x,
                                      const Scalar& y) {
  using std::cos;
  using std::sin;
  const Scalar dx = x - ref.x;
  const Scalar dy = y - ref.y;
  const Scalar s = sin(ref.psi);
  const Scalar c = cos(ref.psi);
  return {s * dx - c * dy, -c * dx - s * dy};
}

/// Range-checked variant. Throws std::domain_error if theta is outside the path.
ContourLag<double> contour_lag_errors(const ReferencePath& path, double x, double y, double theta);

/// Composes analytic straight and circular pieces and samples them.
class PathBuilder {
 public:
  using BoundaryFn = std::function<std::pair<double, double>(double theta)>;

  PathBuilder(double x, double y, double heading);

  PathBuilder& line(double length);
  /// Circular arc; positive sweep turns left (counter-clockwise).
  PathBuilder& arc(double radius, double sweep);

  [[nodiscard]] double length() const;
  [[nodiscard]] ReferencePath build(double ds, const BoundaryFn& bounds,
                                    std::vector<double> lane_markers = {}) const;
  [[nodiscard]] ReferencePath build(double ds, double d_lb, double d_rb,
                                    std::vector<double> lane_markers = {}) const;

 private:
  struct Piece {
    double x0, y0, psi0, length, curvature;
  };
  [[nodiscard]] PathSample sample_at(double theta) const;

  double x_, y_, heading_;
  std::vector<Piece> pieces_;
};

/// Reads one sample per line: theta, x, y, psi, d_lb, d_rb. '#' starts a comment.
ReferencePath load_path_file(const std::string& filename, std::vector<double> lane_markers = {});
void save_path_file(const ReferencePath& path, const std::string& filename);

}  // namespace bmpcc
