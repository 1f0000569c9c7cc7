#include "acceptance.hpp"

#include "bmpcc/branch_mpcc.hpp"

#include "../support/fixtures.hpp"
#include "../support/lq_tree.hpp"

#include <cstdio>
#include <random>

using namespace bmpcc;

namespace {

std::shared_ptr<const ReferencePath> east_road() {
  return std::make_shared<ReferencePath>(PathBuilder(-40.0, -1.75, 0.0).line(120.0).build(0.5, 1.75, 1.75));
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

}  // namespace

TEST_CASE("linear-quadratic tree matches the dense solution") {
  TreeSolverOptions options;
  options.kkt_tolerance = 1e-10;
  double worst = 0.0;
  for (const int b : {0, 4, 11, 19}) {
    for (const auto& [weights, targets] :
         {std::pair{std::vector<double>{0.3, 0.7}, std::vector<double>{4.0, -2.0}},
          std::pair{std::vector<double>{0.2, 0.5, 0.3}, std::vector<double>{1.0, 6.0, -3.0}}}) {
      const lq::LinearTree problem(20, b, weights, targets);
      const Eigen::Vector2d z0(0.5, 1.0);
      TreeSolver<2, 1> solver(options);
      const auto sol = solver.solve(problem, z0);
      CHECK(sol.status == SolveStatus::converged);
      const auto expected = lq::dense_tree_optimum(problem, z0);
      for (std::size_t s = 0; s < weights.size(); ++s) {
        for (int k = 0; k < 20; ++k) worst = std::max(worst, std::abs(sol.inputs[s][k][0] - expected[s][k]));
      }
    }
  }
  std::printf("  largest input error against the dense solution: %.2e\n", worst);
  CHECK(worst <= 1e-6);
}

TEST_CASE("objective gradient agrees with central differences") {
  const auto nlp = build_nlp(turn_and_cross(6), fixture::six_mode_intersection(), on_road(-10.0, 8.0), east_road(),
                             CostWeights{}, VehicleLimits{});
  std::mt19937_64 rng(97);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 300; ++trial) {
    const int k = 1 + static_cast<int>((u(rng) + 1.0) * 19.0);
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
    nlp->stage(k, trial % 2, x.head<7>(), x.tail<3>(), true, m);
    const Eigen::Matrix<double, 10, 1> g = TreeSolver<kStateDim, kInputDim>::stage_gradient(m);
    for (int i = 0; i < 10; ++i) {
      const double h = 1e-6;
      Eigen::Matrix<double, 10, 1> xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      StageModel<kStateDim, kInputDim> mp, mm;
      nlp->stage(k, trial % 2, xp.head<7>(), xp.tail<3>(), false, mp);
      nlp->stage(k, trial % 2, xm.head<7>(), xm.tail<3>(), false, mm);
      const double fd = (mp.cost() - mm.cost()) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i])));
    }
  }
  std::printf("  largest relative gradient error: %.2e\n", worst);
  CHECK(worst <= 1e-5);
}

TEST_CASE("solved trees are non-anticipative") {
  for (const int b : {0, 5, 8, 20, 38}) {
    const auto nlp = build_nlp(turn_and_cross(b), fixture::six_mode_intersection(), on_road(-25.0, 8.0), east_road(),
                               CostWeights{}, VehicleLimits{});
    const PlanTree plan = solve(*nlp, nullptr);
    CHECK(plan.status() != SolveStatus::infeasible);
    double gap = 0.0;
    for (int k = 0; k <= b; ++k) {
      CHECK(plan.solution.inputs[0][k] == plan.solution.inputs[1][k]);
      gap = std::max(gap, (plan.solution.states[0][k] - plan.solution.states[1][k]).lpNorm<Eigen::Infinity>());
    }
    CHECK(gap <= 1e-6);
  }
}

int main(int argc, char** argv) { return acceptance::run(argc, argv, "4 solver verification", 30.0); }
