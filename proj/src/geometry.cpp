#include "bmpcc/geometry.hpp"

#include <algorithm>
#include <limits>

namespace bmpcc {

std::array<Vec2, 4> RectFootprint::corners() const {
  const Vec2 c = center();
  const Vec2 hl = 0.5 * length * axis_long();
  const Vec2 hw = 0.5 * width * axis_lat();
  return {c + hl + hw, c - hl + hw, c - hl - hw, c + hl - hw};
}

Vec2 RectFootprint::to_local(const Vec2& p) const {
  const Vec2 d = p - center();
  return {d.dot(axis_long()), d.dot(axis_lat())};
}

bool RectFootprint::contains(const Vec2& p) const {
  const Vec2 local = to_local(p);
  return std::abs(local.x()) <= 0.5 * length && std::abs(local.y()) <= 0.5 * width;
}

void RectFootprint::validate() const {
  if (!(length > 0.0) || !(width > 0.0)) {
    throw ContractError("RectFootprint: length and width must be positive");
  }
}

namespace {

// Projection interval of a rectangle on a unit axis.
std::pair<double, double> project(const RectFootprint& r, const Vec2& axis) {
  const double c = r.center().dot(axis);
  const double extent = 0.5 * r.length * std::abs(r.axis_long().dot(axis)) +
                        0.5 * r.width * std::abs(r.axis_lat().dot(axis));
  return {c - extent, c + extent};
}

}  // namespace

bool rect_overlap(const RectFootprint& a, const RectFootprint& b) {
  const std::array<Vec2, 4> axes{a.axis_long(), a.axis_lat(), b.axis_long(), b.axis_lat()};
  for (const Vec2& axis : axes) {
    const auto [amin, amax] = project(a, axis);
    const auto [bmin, bmax] = project(b, axis);
    if (amax < bmin || bmax < amin) return false;
  }
  return true;
}

bool segment_hits_rect(const Vec2& p1, const Vec2& p2, const RectFootprint& r) {
  // Liang-Barsky slab clipping in the rectangle frame.
  const Vec2 a = r.to_local(p1);
  const Vec2 d = r.to_local(p2) - a;
  const Vec2 half(0.5 * r.length, 0.5 * r.width);
  double t0 = 0.0;
  double t1 = 1.0;
  for (int axis = 0; axis < 2; ++axis) {
    if (std::abs(d[axis]) < 1e-15) {
      if (std::abs(a[axis]) > half[axis]) return false;
      continue;
    }
    double ta = (-half[axis] - a[axis]) / d[axis];
    double tb = (half[axis] - a[axis]) / d[axis];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

}  // namespace bmpcc
