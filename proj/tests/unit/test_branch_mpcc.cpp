#include "doctest.h"

#include "bmpcc/branch_mpcc.hpp"

#include "../support/fixtures.hpp"
#include "../support/lq_tree.hpp"
#include "../support/oracles.hpp"

#include <numbers>
#include <random>

using namespace bmpcc;

namespace {

std::shared_ptr<const ReferencePath> east_road(double d_lb = 1.75, double d_rb = 1.75) {
  return std::make_shared<ReferencePath>(PathBuilder(-40.0, -1.75, 0.0).line(120.0).build(0.5, d_lb, d_rb));
}

EgoState on_road(double x, double v) {
  EgoState z;
  z.x = x;
  z.y = -1.75;
  z.v = v;
  z.theta = x + 40.0;
  return z;
}

ScenarioTree turn_and_cross(int branching) {
  ScenarioTree tree;
  tree.horizon = 40;
  tree.branching_index = branching;
  Scenario turn, cross;
  turn.joint_mode = 0;
  turn.tp_modes = {0};
  turn.weight = 0.6;
  cross.joint_mode = 2;
  cross.tp_modes = {2};
  cross.weight = 0.4;
  tree.scenarios = {turn, cross};
  return tree;
}

PlanTree solve_crossing(int branching, const PlanTree* warm = nullptr) {
  const auto nlp = build_nlp(turn_and_cross(branching), fixture::six_mode_intersection(), on_road(-25.0, 8.0),
                             east_road(), CostWeights{}, VehicleLimits{});
  return solve(*nlp, warm);
}

}  // namespace

TEST_CASE("running cost examples") {
  const auto path = east_road();
  const CostWeights weights;
  const EgoState z = on_road(0.0, 10.0);
  ControlInput u;
  u.path_speed = 10.0;
  const double base = -weights.q_v * 10.0 + weights.R(2, 2) * 100.0;
  CHECK(running_cost(z, u, *path, weights, {}) == doctest::Approx(base).epsilon(1e-12));

  ObstacleStep ob;
  ob.x = z.x;
  ob.y = z.y;
  const std::vector<ObstacleStep> at{ob};
  CHECK(running_cost(z, u, *path, weights, at) - base == doctest::Approx(weights.q_ob).epsilon(1e-12));
  ob.x = z.x + ob.scale_lon;
  const std::vector<ObstacleStep> ahead{ob};
  CHECK(running_cost(z, u, *path, weights, ahead) - base ==
        doctest::Approx(weights.q_ob * std::exp(-1.0)).epsilon(1e-12));

  EgoState off = z;
  off.y += 0.5;
  off.x += 0.25;
  // contour -0.5, lag -0.25
  const double err = weights.Q(0, 0) * 0.25 + weights.Q(1, 1) * 0.0625;
  CHECK(running_cost(off, u, *path, weights, {}) == doctest::Approx(base + err).epsilon(1e-12));

  const ReferencePath marked = path->with_lane_markers({0.0});
  CHECK(running_cost(z, u, marked, weights, {}) - base == doctest::Approx(weights.q_lm).epsilon(1e-12));

  EgoState beyond = z;
  beyond.theta = 500.0;
  CHECK_THROWS_AS(running_cost(beyond, u, *path, weights, {}), std::domain_error);
}

TEST_CASE("boundary constraint examples") {
  const auto path = east_road(2.0, 2.0);
  EgoState z = on_road(0.0, 5.0);
  z.y = -1.75 - 1.5;
  const Eigen::Vector2d h = boundary_constraint<double>(z.vector(), *path, 2.0);
  CHECK(h[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(h[1] == doctest::Approx(-2.5).epsilon(1e-12));
  z.y = -1.75;
  const Eigen::Vector2d centred = boundary_constraint<double>(z.vector(), *path, 2.0);
  CHECK(centred[0] == doctest::Approx(-1.0));
  CHECK(centred[1] == doctest::Approx(-1.0));
}

TEST_CASE("obstacle constraint examples") {
  ObstacleStep ob;
  ob.x = 10.0;
  ob.y = 0.0;
  EgoState far;
  CHECK((obstacle_constraint<double>(far.vector(), ob, 0.2, fixture::kEgo).array() < 0.0).all());
  EgoState hit;
  hit.x = 10.0;
  CHECK((obstacle_constraint<double>(hit.vector(), ob, 0.2, fixture::kEgo).array() > 0.0).all());
  CHECK(obstacle_constraint<double>(hit.vector(), ob, 0.2, fixture::kEgo)[1] == doctest::Approx(1.0));

  const EgoDiscCover cover = ego_disc_cover(fixture::kEgo);
  CHECK(cover.offsets[0] == doctest::Approx(-1.5));
  CHECK(cover.offsets[1] == doctest::Approx(0.0));
  CHECK(cover.offsets[2] == doctest::Approx(1.5));
  CHECK(cover.radius == doctest::Approx(std::hypot(0.75, 1.0)));
}

TEST_CASE("obstacle constraint never admits an overlap (100000 cases)") {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int admitted = 0, violations = 0;
  for (int trial = 0; trial < 100000; ++trial) {
    EgoState z;
    z.x = 8.0 * u(rng);
    z.y = 8.0 * u(rng);
    z.psi = std::numbers::pi * u(rng);
    ObstacleStep ob;
    ob.heading = std::numbers::pi * u(rng);
    ob.length = 3.5 + 1.5 * u(rng);
    ob.width = 1.8 + 0.3 * u(rng);
    const Extent ego{4.0 + 0.5 * u(rng), 1.9 + 0.2 * u(rng)};
    const double margin = 0.2 * (1.0 + u(rng));
    if ((obstacle_constraint<double>(z.vector(), ob, margin, ego).array() > 0.0).any()) continue;
    ++admitted;
    if (oracle::quads_overlap(oracle::corners(z.x, z.y, z.psi, ego.length, ego.width),
                              oracle::corners(ob.x, ob.y, ob.heading, ob.length, ob.width))) {
      ++violations;
    }
  }
  CHECK(admitted > 10000);
  CHECK(violations == 0);
}

TEST_CASE("variable counts follow the tree layout") {
  const auto p = build_nlp(turn_and_cross(8), fixture::six_mode_intersection(), on_road(-25.0, 8.0), east_road(),
                           CostWeights{}, VehicleLimits{});
  CHECK(p->input_variable_count() == 213);
  CHECK(build_nlp(turn_and_cross(39), fixture::six_mode_intersection(), on_road(-25.0, 8.0), east_road(),
                  CostWeights{}, VehicleLimits{})
            ->input_variable_count() == 120);
  ScenarioTree single = turn_and_cross(0);
  single.scenarios.pop_back();
  CHECK(build_nlp(single, fixture::six_mode_intersection(), on_road(-25.0, 8.0), east_road(), CostWeights{},
                  VehicleLimits{})
            ->input_variable_count() == 120);
  // states k <= b+1 are shared
  CHECK(p->state_variable_count() == (10 + 2 * 30) * kStateDim);

  for (int b = 0; b < 40; ++b) {
    const TreeLayout layout(40, 3, b);
    CHECK(layout.input_node_count() == (b + 1) + 3 * (39 - b));
  }
  CHECK_THROWS_AS(TreeLayout(40, 2, 40), ContractError);
}

TEST_CASE("build_nlp rejects inconsistent inputs") {
  ScenarioTree tree = turn_and_cross(5);
  tree.scenarios[0].tp_modes = {9};
  CHECK_THROWS_AS(build_nlp(tree, fixture::six_mode_intersection(), on_road(0.0, 5.0), east_road(), CostWeights{},
                            VehicleLimits{}),
                  ContractError);
  CHECK_THROWS_AS(build_nlp(turn_and_cross(5), fixture::six_mode_intersection(), on_road(0.0, 5.0), nullptr,
                            CostWeights{}, VehicleLimits{}),
                  ContractError);
  CostWeights bad;
  bad.Q(0, 0) = -1.0;
  CHECK_THROWS(build_nlp(turn_and_cross(5), fixture::six_mode_intersection(), on_road(0.0, 5.0), east_road(), bad,
                         VehicleLimits{}));
}

TEST_CASE("tree solver matches the dense optimum of a linear-quadratic tree") {
  for (const int b : {0, 3, 9, 14}) {
    const lq::LinearTree problem(15, b, {0.3, 0.7}, {4.0, -2.0});
    const Eigen::Vector2d z0(0.5, 1.0);
    TreeSolverOptions options;
    options.kkt_tolerance = 1e-10;
    TreeSolver<2, 1> solver(options);
    const auto sol = solver.solve(problem, z0);
    CHECK(sol.status == SolveStatus::converged);
    const auto expected = lq::dense_tree_optimum(problem, z0);
    double worst = 0.0;
    for (int s = 0; s < 2; ++s) {
      for (int k = 0; k < 15; ++k) worst = std::max(worst, std::abs(sol.inputs[s][k][0] - expected[s][k]));
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("stage gradients and dynamics Jacobians agree with finite differences") {
  const auto nlp = build_nlp(turn_and_cross(6), fixture::six_mode_intersection(), on_road(-10.0, 8.0),
                             east_road(), CostWeights{}, VehicleLimits{});
  std::mt19937_64 rng(67);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + static_cast<int>((u(rng) + 1.0) * 19.0);
    const int s = trial % 2;
    EgoState z = on_road(-8.0 + 6.0 * u(rng), 6.0 + 3.0 * u(rng));
    z.y += 0.8 * u(rng);
    z.psi = 0.3 * u(rng);
    z.a = u(rng);
    z.delta = 0.2 * u(rng);
    z.theta += 1.5 * u(rng);
    const ControlInput in{u(rng), 0.3 * u(rng), 8.0 + 2.0 * u(rng)};
    Eigen::Matrix<double, 10, 1> x;
    x << z.vector(), in.vector();

    StageModel<kStateDim, kInputDim> m;
    nlp->stage(k, s, x.head<7>(), x.tail<3>(), true, m);
    const Eigen::Matrix<double, 10, 1> g = TreeSolver<kStateDim, kInputDim>::stage_gradient(m);
    BranchMpccProblem::StateJacobian A;
    BranchMpccProblem::InputJacobian B;
    nlp->dynamics(k, x.head<7>(), x.tail<3>(), &A, &B);
    for (int i = 0; i < 10; ++i) {
      const double h = 1e-6;
      Eigen::Matrix<double, 10, 1> xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      StageModel<kStateDim, kInputDim> mp, mm;
      nlp->stage(k, s, xp.head<7>(), xp.tail<3>(), false, mp);
      nlp->stage(k, s, xm.head<7>(), xm.tail<3>(), false, mm);
      const double fd = (mp.cost() - mm.cost()) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i])));

      const auto fp = nlp->dynamics(k, xp.head<7>(), xp.tail<3>(), nullptr, nullptr);
      const auto fm = nlp->dynamics(k, xm.head<7>(), xm.tail<3>(), nullptr, nullptr);
      const Eigen::Matrix<double, 7, 1> col = i < 7 ? Eigen::Matrix<double, 7, 1>(A.col(i)) : Eigen::Matrix<double, 7, 1>(B.col(i - 7));
      const Eigen::Matrix<double, 7, 1> dfd = (fp - fm) / (2.0 * h);
      worst = std::max(worst, (dfd - col).lpNorm<Eigen::Infinity>() / std::max(1.0, col.lpNorm<Eigen::Infinity>()));

      for (Eigen::Index c = 0; c < m.ineq.size(); ++c) {
        const double dh = (mp.ineq[c] - mm.ineq[c]) / (2.0 * h);
        worst = std::max(worst, std::abs(dh - m.ineq_jac(c, i)) / std::max(1.0, std::abs(m.ineq_jac(c, i))));
      }
    }
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("branch plan is non-anticipative and deterministic") {
  for (const int b : {0, 7, 15}) {
    const PlanTree plan = solve_crossing(b);
    CHECK(plan.status() != SolveStatus::infeasible);
    for (int k = 0; k <= b; ++k) {
      CHECK(plan.solution.inputs[0][k] == plan.solution.inputs[1][k]);
      CHECK((plan.solution.states[0][k] - plan.solution.states[1][k]).lpNorm<Eigen::Infinity>() <= 1e-6);
    }
    CHECK((plan.solution.states[0][b + 1] - plan.solution.states[1][b + 1]).lpNorm<Eigen::Infinity>() <= 1e-6);

    const PlanTree again = solve_crossing(b);
    for (int s = 0; s < 2; ++s) {
      for (int k = 0; k < 40; ++k) {
        CHECK(again.solution.inputs[s][k] == plan.solution.inputs[s][k]);
        CHECK(again.solution.states[s][k] == plan.solution.states[s][k]);
      }
    }
    CHECK(plan.dominant_scenario() == 0);
    CHECK(plan.trajectory(1).states.size() == 40);
  }
}

TEST_CASE("plans respect the constraints and follow the dynamics") {
  const PlanTree plan = solve_crossing(5);
  const VehicleLimits limits;
  const auto preds = fixture::six_mode_intersection();
  for (int s = 0; s < 2; ++s) {
    for (int k = 0; k + 1 < 40; ++k) {
      const EgoState next = discrete_step(plan.state(s, k), plan.input(s, k), 0.1, limits);
      CHECK((next.vector() - plan.solution.states[s][k + 1]).lpNorm<Eigen::Infinity>() < 1e-9);
    }
    for (int k = 0; k < 40; ++k) {
      const ControlInput in = plan.input(s, k);
      CHECK(in.jerk <= limits.jerk_max + 0.05);
      CHECK(in.jerk >= limits.jerk_min - 0.05);
      CHECK(in.path_speed >= -0.05);
      CHECK(plan.state(s, k).v >= -0.05);
    }
  }
}

TEST_CASE("postponed branching never costs more than a fully shared plan") {
  const PlanTree shared = solve_crossing(39);
  for (const int b : {0, 10, 20}) {
    PlanTree warm = shared;
    warm.tree.branching_index = b;
    const PlanTree branched = solve_crossing(b, &warm);
    if (shared.status() != SolveStatus::infeasible) {
      CHECK(branched.status() != SolveStatus::infeasible);
      CHECK(branched.cost() <= shared.cost() + 1e-6 * std::max(1.0, std::abs(shared.cost())));
    }
  }
}
