#pragma once

// Independent reference computations for the test suites. Nothing here calls
// into the library except for plain data types.

#include "bmpcc/geometry.hpp"
#include "bmpcc/prediction.hpp"
#include "bmpcc/vehicle.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <array>
#include <cmath>
#include <random>
#include <vector>

namespace oracle {

using Vec2 = Eigen::Vector2d;

/// Corners of an oriented rectangle, counter-clockwise.
inline std::array<Vec2, 4> corners(double cx, double cy, double heading, double length, double width) {
  const Vec2 c(cx, cy);
  const Vec2 ax(std::cos(heading) * 0.5 * length, std::sin(heading) * 0.5 * length);
  const Vec2 ay(-std::sin(heading) * 0.5 * width, std::cos(heading) * 0.5 * width);
  return {c - ax - ay, c + ax - ay, c + ax + ay, c - ax + ay};
}

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Containment by the sign of the edge cross products.
inline bool inside(const Vec2& p, const std::array<Vec2, 4>& poly, double tol = 1e-12) {
  for (int i = 0; i < 4; ++i) {
    const Vec2& a = poly[static_cast<std::size_t>(i)];
    const Vec2& b = poly[static_cast<std::size_t>((i + 1) % 4)];
    if (cross(b - a, p - a) < -tol) return false;
  }
  return true;
}

inline bool inside(const Vec2& p, const bmpcc::RectFootprint& r) {
  return inside(p, corners(r.center_x, r.center_y, r.heading, r.length, r.width));
}

inline int orientation(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double v = cross(b - a, c - a);
  if (std::abs(v) < 1e-12) return 0;
  return v > 0 ? 1 : -1;
}

inline bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  return std::min(a.x(), b.x()) - 1e-12 <= p.x() && p.x() <= std::max(a.x(), b.x()) + 1e-12 &&
         std::min(a.y(), b.y()) - 1e-12 <= p.y() && p.y() <= std::max(a.y(), b.y()) + 1e-12;
}

inline bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

/// Exact overlap of two convex quadrilaterals: a corner inside the other or an edge crossing.
inline bool quads_overlap(const std::array<Vec2, 4>& a, const std::array<Vec2, 4>& b) {
  for (const Vec2& p : a) {
    if (inside(p, b)) return true;
  }
  for (const Vec2& p : b) {
    if (inside(p, a)) return true;
  }
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (segments_intersect(a[static_cast<std::size_t>(i)], a[static_cast<std::size_t>((i + 1) % 4)],
                             b[static_cast<std::size_t>(j)], b[static_cast<std::size_t>((j + 1) % 4)])) {
        return true;
      }
    }
  }
  return false;
}

/// Exact segment against convex quadrilateral: an endpoint inside or an edge crossing.
inline bool segment_hits(const Vec2& p1, const Vec2& p2, const bmpcc::RectFootprint& r) {
  const auto poly = corners(r.center_x, r.center_y, r.heading, r.length, r.width);
  if (inside(p1, poly) || inside(p2, poly)) return true;
  for (int i = 0; i < 4; ++i) {
    if (segments_intersect(p1, p2, poly[static_cast<std::size_t>(i)], poly[static_cast<std::size_t>((i + 1) % 4)])) {
      return true;
    }
  }
  return false;
}

/// Dense sampling of points along the segment.
inline bool segment_hits_sampled(const Vec2& p1, const Vec2& p2, const bmpcc::RectFootprint& r, int samples) {
  for (int i = 0; i <= samples; ++i) {
    const double t = static_cast<double>(i) / samples;
    if (inside(p1 + t * (p2 - p1), r)) return true;
  }
  return false;
}

/// Grid sampling of rectangle `a` at spacing h, tested for containment in `b`, and vice versa.
inline bool overlap_sampled(const bmpcc::RectFootprint& a, const bmpcc::RectFootprint& b, double h) {
  auto probe = [h](const bmpcc::RectFootprint& from, const bmpcc::RectFootprint& to) {
    const auto poly = corners(to.center_x, to.center_y, to.heading, to.length, to.width);
    const Vec2 ax(std::cos(from.heading), std::sin(from.heading));
    const Vec2 ay(-std::sin(from.heading), std::cos(from.heading));
    const int nu = static_cast<int>(std::ceil(from.length / h));
    const int nv = static_cast<int>(std::ceil(from.width / h));
    for (int i = 0; i <= nu; ++i) {
      for (int j = 0; j <= nv; ++j) {
        const double u = -0.5 * from.length + from.length * i / nu;
        const double v = -0.5 * from.width + from.width * j / nv;
        if (inside(Vec2(from.center_x, from.center_y) + u * ax + v * ay, poly)) return true;
      }
    }
    return false;
  };
  return probe(a, b) || probe(b, a);
}

/// Monte-Carlo mass of N(mean, cov) inside the rectangle, with its standard error.
struct McEstimate {
  double p = 0.0;
  double se = 0.0;
};

inline McEstimate gaussian_mass_mc(const Vec2& mean, const Eigen::Matrix2d& cov, const bmpcc::RectFootprint& r,
                                   int samples, std::mt19937_64& rng) {
  const Eigen::Matrix2d l = Eigen::LLT<Eigen::Matrix2d>(cov).matrixL();
  const auto poly = corners(r.center_x, r.center_y, r.heading, r.length, r.width);
  std::normal_distribution<double> n(0.0, 1.0);
  long hits = 0;
  for (int i = 0; i < samples; ++i) {
    const Vec2 p = mean + l * Vec2(n(rng), n(rng));
    if (inside(p, poly, 0.0)) ++hits;
  }
  const double p = static_cast<double>(hits) / samples;
  return {p, std::sqrt(std::max(p * (1.0 - p), 1e-300) / samples)};
}

/// Kinematic bicycle derivative, written out independently of the library.
inline std::array<double, 7> bicycle(const std::array<double, 7>& z, const std::array<double, 3>& u, double l) {
  return {z[3] * std::cos(z[2]), z[3] * std::sin(z[2]), z[3] * std::tan(z[5]) / l, z[4], u[0], u[1], u[2]};
}

/// Fine RK4 integration of one interval split into `substeps` pieces.
inline std::array<double, 7> integrate(std::array<double, 7> z, const std::array<double, 3>& u, double dt,
                                       double l, int substeps) {
  const double h = dt / substeps;
  auto axpy = [](const std::array<double, 7>& a, double s, const std::array<double, 7>& b) {
    std::array<double, 7> r{};
    for (int i = 0; i < 7; ++i) r[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)] + s * b[static_cast<std::size_t>(i)];
    return r;
  };
  for (int s = 0; s < substeps; ++s) {
    const auto k1 = bicycle(z, u, l);
    const auto k2 = bicycle(axpy(z, 0.5 * h, k1), u, l);
    const auto k3 = bicycle(axpy(z, 0.5 * h, k2), u, l);
    const auto k4 = bicycle(axpy(z, h, k3), u, l);
    for (int i = 0; i < 7; ++i) {
      const auto j = static_cast<std::size_t>(i);
      z[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
  }
  return z;
}

/// Bhattacharyya distance from explicit 2x2 formulas.
inline double bhattacharyya2(const Vec2& mi, const Eigen::Matrix2d& si, const Vec2& mj, const Eigen::Matrix2d& sj) {
  const Eigen::Matrix2d s = 0.5 * (si + sj);
  const double det = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
  Eigen::Matrix2d inv;
  inv << s(1, 1), -s(0, 1), -s(1, 0), s(0, 0);
  inv /= det;
  const Vec2 d = mi - mj;
  const double di = si(0, 0) * si(1, 1) - si(0, 1) * si(1, 0);
  const double dj = sj(0, 0) * sj(1, 1) - sj(0, 1) * sj(1, 0);
  return d.dot(inv * d) / 8.0 + 0.5 * std::log(det / std::sqrt(di * dj));
}

inline double idm(double v, double gap, double dv, double v0, double T, double s0, double a, double b, double delta) {
  const double star = s0 + v * T + v * dv / (2.0 * std::sqrt(a * b));
  return a * (1.0 - std::pow(v / v0, delta) - (star / gap) * (star / gap));
}

}  // namespace oracle
