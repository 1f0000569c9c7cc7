#include "doctest.h"

#include "bmpcc/geometry.hpp"
#include "bmpcc/path.hpp"

#include "../support/oracles.hpp"

#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>

using namespace bmpcc;

namespace {

ReferencePath straight(double length = 50.0) { return PathBuilder(0.0, 0.0, 0.0).line(length).build(5.0, 2.0, 2.0); }

}  // namespace

TEST_CASE("query at a stored sample returns that sample") {
  const ReferencePath path = PathBuilder(1.0, 2.0, 0.3).line(10.0).arc(15.0, 0.8).build(0.5, 2.0, 1.5);
  for (const PathSample& s : path.samples()) {
    const PathPose<double> p = path.query(s.theta);
    CHECK(p.x == s.x);
    CHECK(p.y == s.y);
    CHECK(p.psi == s.psi);
    CHECK(p.d_lb == s.d_lb);
    CHECK(p.d_rb == s.d_rb);
  }
}

TEST_CASE("query interpolates linearly between samples") {
  const ReferencePath path = straight();
  const PathPose<double> p = path.query(12.5);
  CHECK(p.x == doctest::Approx(12.5).epsilon(1e-12));
  CHECK(p.y == doctest::Approx(0.0));
}

TEST_CASE("query on a circular arc matches the closed form") {
  constexpr double r = 20.0;
  const ReferencePath path = PathBuilder(0.0, 0.0, 0.0).arc(r, 1.0).build(0.5, 2.0, 2.0);
  REQUIRE(path.samples().size() % 2 == 1);
  const double theta = 10.0;
  const PathPose<double> p = path.query(theta);
  const double phi = theta / r;
  CHECK(std::abs(p.x - r * std::sin(phi)) < 1e-6);
  CHECK(std::abs(p.y - r * (1.0 - std::cos(phi))) < 1e-6);
  CHECK(std::abs(p.psi - phi) < 1e-9);
}

TEST_CASE("query outside the path is a domain error") {
  const ReferencePath path = straight();
  CHECK_THROWS_AS((void)path.query(-0.1), std::domain_error);
  CHECK_THROWS_AS((void)path.query(50.1), std::domain_error);
  CHECK_THROWS_AS((void)contour_lag_errors(path, 0.0, 0.0, 60.0), std::domain_error);
}

TEST_CASE("heading interpolation takes the short way across the wrap") {
  std::vector<PathSample> samples{{0.0, 0.0, 0.0, 3.0, 1.0, 1.0}, {0.5, -0.5, 0.0, -3.0, 1.0, 1.0}};
  CHECK_THROWS_AS((void)ReferencePath(samples), std::invalid_argument);
  samples[1].psi = 3.0 + 0.2;
  const ReferencePath path(samples);
  CHECK(path.query(0.25).psi == doctest::Approx(3.1));
}

TEST_CASE("path invariants are enforced") {
  std::vector<PathSample> samples{{0.0, 0, 0, 0, 1, 1}, {0.4, 0.4, 0, 0, 1, 1}, {0.8, 0.8, 0, 0, 1, 1}};
  CHECK_NOTHROW((void)ReferencePath(samples));
  CHECK_THROWS_AS((void)ReferencePath(samples, {}, 0.5 - 0.2), std::invalid_argument);
  samples[1].d_rb = 0.0;
  CHECK_THROWS_AS((void)ReferencePath(samples), std::invalid_argument);
  samples[1].d_rb = 1.0;
  samples[2].theta = 0.4;
  CHECK_THROWS_AS((void)ReferencePath(samples), std::invalid_argument);
}

TEST_CASE("contouring and lag errors on a straight path") {
  const ReferencePath path = straight();
  const ContourLag<double> on = contour_lag_errors(path, 7.0, 0.0, 7.0);
  CHECK(on.contour == 0.0);
  CHECK(on.lag == 0.0);
  const ContourLag<double> left = contour_lag_errors(path, 7.0, 1.0, 7.0);
  CHECK(left.contour == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(left.lag == doctest::Approx(0.0));
  const ContourLag<double> behind = contour_lag_errors(path, 6.0, 0.0, 7.0);
  CHECK(behind.contour == doctest::Approx(0.0));
  CHECK(behind.lag == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("contouring errors: rigid rotation invariance and orthonormality (1000 cases)") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> coord(-30.0, 30.0);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const double x0 = coord(rng), y0 = coord(rng), h0 = angle(rng);
    const double bend = 0.2 * angle(rng);
    const ReferencePath base = PathBuilder(x0, y0, h0).line(10.0).arc(25.0, bend).build(0.5, 2.0, 2.0);
    const double phi = angle(rng);
    const double c = std::cos(phi), s = std::sin(phi);
    const ReferencePath rotated =
        PathBuilder(c * x0 - s * y0, s * x0 + c * y0, h0 + phi).line(10.0).arc(25.0, bend).build(0.5, 2.0, 2.0);
    const double theta = frac(rng) * base.theta_max();
    const double px = coord(rng), py = coord(rng);
    const ContourLag<double> e = contour_lag_errors(base, px, py, theta);
    const ContourLag<double> er = contour_lag_errors(rotated, c * px - s * py, s * px + c * py, theta);
    CHECK(std::abs(e.contour - er.contour) < 1e-9);
    CHECK(std::abs(e.lag - er.lag) < 1e-9);
    const PathPose<double> ref = base.query(theta);
    const double d2 = (px - ref.x) * (px - ref.x) + (py - ref.y) * (py - ref.y);
    CHECK(std::abs(e.contour * e.contour + e.lag * e.lag - d2) < 1e-9 * std::max(1.0, d2));
  }
}

TEST_CASE("rect_overlap examples") {
  const RectFootprint a{0.0, 0.0, 0.3, 4.0, 2.0};
  CHECK(rect_overlap(a, a));
  CHECK_FALSE(rect_overlap({0, 0, 0, 1, 1}, {10, 0, 0, 1, 1}));
  const RectFootprint r1{0.0, 0.0, 0.0, 4.0, 2.0};
  for (const double dx : {2.0, 3.0, 3.5, 4.0}) {
    const RectFootprint r2{dx, 0.0, std::numbers::pi / 4.0, 4.0, 2.0};
    CHECK(rect_overlap(r1, r2) == oracle::overlap_sampled(r1, r2, 0.01));
  }
  const RectFootprint r2{std::sqrt(2.0), std::sqrt(2.0), std::numbers::pi / 4.0, 4.0, 2.0};
  CHECK(rect_overlap(r1, r2) == oracle::overlap_sampled(r1, r2, 0.01));
}

TEST_CASE("rect_overlap is symmetric and agrees with sampling (1000 cases)") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pos(-5.0, 5.0);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> size(0.5, 5.0);
  int agree = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const RectFootprint a{pos(rng), pos(rng), angle(rng), size(rng), size(rng)};
    const RectFootprint b{pos(rng), pos(rng), angle(rng), size(rng), size(rng)};
    CHECK(rect_overlap(a, b) == rect_overlap(b, a));
    if (rect_overlap(a, b) == oracle::overlap_sampled(a, b, 0.02)) ++agree;
  }
  // grid sampling can only miss slivers thinner than its spacing
  CHECK(agree >= 995);
}

TEST_CASE("segment_hits_rect examples") {
  const RectFootprint r{0.0, 0.0, 0.4, 4.0, 2.0};
  CHECK(segment_hits_rect({0.1, 0.1}, {-0.2, 0.3}, r));
  CHECK_FALSE(segment_hits_rect({-5.0, 4.0}, {5.0, 4.0}, r));
  const auto c = oracle::corners(0.0, 0.0, 0.4, 4.0, 2.0);
  const Vec2 corner = c[2];
  const Vec2 normal = (corner - r.center()).normalized();
  const Vec2 tangent(-normal.y(), normal.x());
  for (const double off : {1e-2, 1e-3, -1e-3, -1e-2}) {
    const Vec2 p = corner + off * normal;
    CHECK(segment_hits_rect(p - 3.0 * tangent, p + 3.0 * tangent, r) ==
          oracle::segment_hits_sampled(p - 3.0 * tangent, p + 3.0 * tangent, r, 10000));
  }
}

TEST_CASE("segment_hits_rect agrees with the exact polygon oracle (100000 cases)") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pos(-6.0, 6.0);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> size(0.5, 5.0);
  int mismatches = 0;
  for (int trial = 0; trial < 100000; ++trial) {
    const RectFootprint r{pos(rng), pos(rng), angle(rng), size(rng), size(rng)};
    const Vec2 p1(pos(rng), pos(rng));
    const Vec2 p2(pos(rng), pos(rng));
    if (segment_hits_rect(p1, p2, r) != oracle::segment_hits(p1, p2, r)) ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("path files round-trip") {
  const ReferencePath path = PathBuilder(0.0, 0.0, 0.1).line(5.0).arc(10.0, -0.5).build(0.5, 2.0, 1.0);
  const std::string file = (std::filesystem::temp_directory_path() / "bmpcc_path_roundtrip.csv").string();
  save_path_file(path, file);
  const ReferencePath loaded = load_path_file(file);
  std::remove(file.c_str());
  REQUIRE(loaded.samples().size() == path.samples().size());
  for (std::size_t i = 0; i < path.samples().size(); ++i) {
    CHECK(loaded.samples()[i].x == path.samples()[i].x);
    CHECK(loaded.samples()[i].psi == path.samples()[i].psi);
  }
}
