#include "acceptance.hpp"

#include "bmpcc/decision_postponing.hpp"
#include "bmpcc/path.hpp"
#include "bmpcc/scenario_selection.hpp"
#include "bmpcc/sim/monte_carlo.hpp"
#include "bmpcc/vehicle.hpp"

#include "../support/builders.hpp"
#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"

#include <algorithm>
#include <numbers>
#include <numeric>
#include <random>

using namespace bmpcc;

namespace {

constexpr int kCases = 1000;

Eigen::Matrix2d random_spd(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::Matrix2d a;
  a << u(rng), u(rng), u(rng), u(rng);
  return a * a.transpose() + 0.01 * Eigen::Matrix2d::Identity();
}

}  // namespace

TEST_CASE("clusters partition the joint modes") {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < kCases; ++trial) {
    PredictionSet p;
    p.horizon = 8;
    const int tps = 1 + static_cast<int>((u(rng) + 1.0) * 1.5);
    for (int o = 0; o < tps; ++o) {
      TpPrediction tp;
      const int modes = 1 + static_cast<int>((u(rng) + 1.0) * 3.0);
      for (int m = 0; m < modes; ++m) {
        ModePrediction mode;
        const double x = 10.0 * u(rng), y = 10.0 * u(rng), vx = 3.0 * u(rng), vy = 3.0 * u(rng);
        for (int k = 0; k < 8; ++k) mode.states.push_back(build::gaussian(x + vx * k, y + vy * k, 0.5));
        mode.probability = 1.0 / modes;
        tp.modes.push_back(mode);
      }
      p.tps.push_back(tp);
    }
    EgoState z;
    z.v = 2.0 * (u(rng) + 1.0);
    z.psi = 3.0 * u(rng);
    const auto clusters = cluster_modes(p, constant_velocity_plan(z, 8, 0.5, VehicleLimits{}), fixture::kEgo);
    std::vector<int> seen;
    for (const auto& c : clusters) {
      CHECK_FALSE(c.empty());
      seen.insert(seen.end(), c.begin(), c.end());
    }
    std::sort(seen.begin(), seen.end());
    std::vector<int> all(static_cast<std::size_t>(joint_mode_count(p)));
    std::iota(all.begin(), all.end(), 0);
    CHECK(seen == all);
  }
}

TEST_CASE("scenario weights sum to one") {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < kCases; ++trial) {
    const int n = 1 + static_cast<int>(u(rng) * 6);
    std::vector<double> probs;
    for (int m = 0; m < n; ++m) probs.push_back(0.01 + u(rng));
    const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    for (double& q : probs) q /= total;
    const PredictionSet p = build::single_tp(probs);
    std::vector<std::vector<int>> clusters;
    for (int m = 0; m < n; ++m) {
      if (clusters.empty() || u(rng) < 0.4) clusters.emplace_back();
      clusters.back().push_back(m);
    }
    std::vector<double> ceps;
    for (int m = 0; m < n; ++m) ceps.push_back(u(rng) < 0.5 ? 0.0 : u(rng));
    const double lambda = 0.1 + u(rng);
    const int s_max = 1 + static_cast<int>(u(rng) * 3);
    const ScenarioTree t = select_scenarios(p, clusters, build::flat_risk(p, {ceps}, lambda), lambda, s_max);
    double w = 0.0;
    for (const Scenario& s : t.scenarios) w += s.weight;
    CHECK(std::abs(w - 1.0) < 1e-9);
  }
}

TEST_CASE("bhattacharyya distance is non-negative") {
  std::mt19937_64 rng(107);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < kCases; ++trial) {
    const Vec2 mi(u(rng), u(rng)), mj(u(rng), u(rng));
    CHECK(bhattacharyya<2>(mi, random_spd(rng), mj, random_spd(rng)) >= -1e-12);
  }
}

TEST_CASE("branching index is monotone in the threshold") {
  std::mt19937_64 rng(109);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < kCases; ++trial) {
    const int horizon = 10 + static_cast<int>(u(rng) * 30);
    PredictionSet p;
    p.horizon = horizon;
    const int tps = 1 + static_cast<int>(u(rng) * 3);
    for (int o = 0; o < tps; ++o) {
      TpPrediction tp;
      const double sigma = 0.2 + u(rng);
      const double growth = 0.1 * u(rng);
      for (int m = 0; m < 2; ++m) {
        ModePrediction mode;
        mode.probability = 0.5;
        const double a = 2.0 * u(rng) - 1.0;
        for (int k = 0; k < horizon; ++k) {
          GaussianState g = build::gaussian(0.005 * a * k * k, 0.1 * m * k * u(rng), sigma + growth * k);
          mode.states.push_back(g);
        }
        tp.modes.push_back(mode);
      }
      p.tps.push_back(tp);
    }
    std::vector<std::vector<double>> ceps(static_cast<std::size_t>(tps), std::vector<double>(2, 0.05 * u(rng)));
    const RiskReport risk = build::flat_risk(p, ceps, 0.5);
    PostponingConfig low, high;
    low.threshold = 0.05 + u(rng);
    high.threshold = low.threshold + u(rng);
    const int b_low = branching_time(build::two_scenarios(tps, horizon), p, risk, low).index;
    const int b_high = branching_time(build::two_scenarios(tps, horizon), p, risk, high).index;
    CHECK(b_low <= b_high);
  }
}

TEST_CASE("RK4 step shows fourth-order local error") {
  const VehicleLimits limits;
  std::mt19937_64 rng(113);
  std::uniform_real_distribution<double> any(-1.0, 1.0);
  auto pose_error = [](const EgoState& z, const std::array<double, 7>& ref) {
    const std::array<double, 7> a{z.x, z.y, z.psi, z.v, z.a, z.delta, z.theta};
    double e = 0.0;
    for (std::size_t i = 0; i < 7; ++i) e = std::max(e, std::abs(a[i] - ref[i]));
    return e;
  };
  for (int trial = 0; trial < kCases; ++trial) {
    const EgoState z{0.0, 0.0, any(rng) * 3.0, 8.0 + 4.0 * any(rng), 2.0 * any(rng), 0.4 * any(rng), 0.0};
    const ControlInput u{3.0 * any(rng), 0.5 * any(rng), 10.0};
    const std::array<double, 7> z0{z.x, z.y, z.psi, z.v, z.a, z.delta, z.theta};
    auto error = [&](double h) {
      return pose_error(discrete_step(z, u, h, limits),
                        oracle::integrate(z0, {u.jerk, u.steer_rate, u.path_speed}, h, limits.wheelbase, 100));
    };
    const double coarse = error(0.4), fine = error(0.2);
    // halving h divides an O(h^5) error by 32; 8 leaves room for the oracle
    CHECK((coarse < 1e-12 || coarse / fine >= 8.0));
  }
}

TEST_CASE("contouring errors are invariant under rigid motion") {
  std::mt19937_64 rng(127);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> coord(-30.0, 30.0);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  for (int trial = 0; trial < kCases; ++trial) {
    const double x0 = coord(rng), y0 = coord(rng), h0 = angle(rng), bend = 0.2 * angle(rng);
    const ReferencePath base = PathBuilder(x0, y0, h0).line(10.0).arc(25.0, bend).build(0.5, 2.0, 2.0);
    const double phi = angle(rng), tx = coord(rng), ty = coord(rng);
    const double c = std::cos(phi), s = std::sin(phi);
    auto move = [&](double x, double y) { return Vec2(c * x - s * y + tx, s * x + c * y + ty); };
    const Vec2 start = move(x0, y0);
    const ReferencePath moved =
        PathBuilder(start.x(), start.y(), h0 + phi).line(10.0).arc(25.0, bend).build(0.5, 2.0, 2.0);
    const double theta = frac(rng) * base.theta_max();
    const double px = coord(rng), py = coord(rng);
    const Vec2 q = move(px, py);
    const ContourLag<double> e = contour_lag_errors(base, px, py, theta);
    const ContourLag<double> em = contour_lag_errors(moved, q.x(), q.y(), theta);
    CHECK(std::abs(e.contour - em.contour) < 1e-8);
    CHECK(std::abs(e.lag - em.lag) < 1e-8);
  }
}

TEST_CASE("monte carlo is reproducible under a fixed seed") {
  sim::MonteCarloConfig config;
  config.n_runs = kCases;
  config.variants = {PlannerVariant::full};
  config.seed = 131;
  config.merging.duration = 0.3;
  const sim::MonteCarloResult a = sim::monte_carlo(config);
  config.workers = 2;
  const sim::MonteCarloResult b = sim::monte_carlo(config);
  REQUIRE(a.runs.size() == static_cast<std::size_t>(kCases));
  REQUIRE(b.runs.size() == a.runs.size());
  int identical = 0;
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    const bool same = a.runs[i].seed == b.runs[i].seed && a.runs[i].outcome == b.runs[i].outcome &&
                      a.runs[i].cost == b.runs[i].cost && a.runs[i].cycles == b.runs[i].cycles &&
                      a.runs[i].failed == b.runs[i].failed;
    identical += same ? 1 : 0;
  }
  CHECK(identical == kCases);
  CHECK(a.table[0].mean_cost == b.table[0].mean_cost);
}

int main(int argc, char** argv) { return acceptance::run(argc, argv, "8 property suites", 300.0); }
