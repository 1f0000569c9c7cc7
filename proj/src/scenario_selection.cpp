#include "bmpcc/scenario_selection.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace bmpcc {

PlanTrajectory constant_velocity_plan(const EgoState& z0, int horizon, double dt,
                                      const VehicleLimits& limits) {
  PlanTrajectory plan;
  EgoState z = z0;
  z.a = 0.0;
  const ControlInput u{0.0, 0.0, z0.v};
  for (int k = 0; k < horizon; ++k) {
    plan.states.push_back(z);
    z = discrete_step(z, u, dt, limits);
  }
  return plan;
}

int joint_mode_count(const PredictionSet& predictions) {
  std::size_t count = 0;
  for (const TpPrediction& tp : predictions.tps) count = std::max(count, tp.modes.size());
  return static_cast<int>(count);
}

int joint_member(const TpPrediction& tp, int joint_mode) {
  return std::min(joint_mode, static_cast<int>(tp.modes.size()) - 1);
}

double joint_probability(const PredictionSet& predictions, int joint_mode) {
  double total = 0.0;
  int multimodal = 0;
  for (const TpPrediction& tp : predictions.tps) {
    if (tp.modes.size() < 2) continue;
    ++multimodal;
    if (joint_mode < static_cast<int>(tp.modes.size())) {
      total += tp.modes[static_cast<std::size_t>(joint_mode)].probability;
    }
  }
  if (multimodal == 0) return joint_mode == 0 ? 1.0 : 0.0;
  return total / multimodal;
}

bool uvd_equivalent(const ModePrediction& a, const ModePrediction& b, const PlanTrajectory& plan,
                    const Extent& ego) {
  if (a.states.size() != b.states.size() || a.states.size() != plan.states.size()) {
    throw ContractError("uvd_equivalent: horizon mismatch");
  }
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    const EgoState& z = plan.states[k];
    const RectFootprint rect{z.x, z.y, z.psi, ego.length, ego.width};
    if (segment_hits_rect(a.states[k].mean, b.states[k].mean, rect)) return false;
  }
  return true;
}

namespace {

struct DisjointSet {
  explicit DisjointSet(int n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int i) {
    while (parent[static_cast<std::size_t>(i)] != i) {
      parent[static_cast<std::size_t>(i)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
      i = parent[static_cast<std::size_t>(i)];
    }
    return i;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
  std::vector<int> parent;
};

}  // namespace

std::vector<std::vector<int>> cluster_modes(const PredictionSet& predictions,
                                            const PlanTrajectory& plan, const Extent& ego) {
  const int n = joint_mode_count(predictions);
  DisjointSet sets(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (sets.find(i) == sets.find(j)) continue;
      bool equivalent = true;
      for (const TpPrediction& tp : predictions.tps) {
        const int mi = joint_member(tp, i);
        const int mj = joint_member(tp, j);
        if (mi == mj) continue;
        if (!uvd_equivalent(tp.modes[static_cast<std::size_t>(mi)],
                            tp.modes[static_cast<std::size_t>(mj)], plan, ego)) {
          equivalent = false;
          break;
        }
      }
      if (equivalent) sets.unite(i, j);
    }
  }
  std::vector<std::vector<int>> clusters;
  std::vector<int> slot(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    const int root = sets.find(i);
    if (slot[static_cast<std::size_t>(root)] < 0) {
      slot[static_cast<std::size_t>(root)] = static_cast<int>(clusters.size());
      clusters.emplace_back();
    }
    clusters[static_cast<std::size_t>(slot[static_cast<std::size_t>(root)])].push_back(i);
  }
  return clusters;
}

Vec2 inflated_half_extents(double ego_heading, const Extent& ego, double tp_heading,
                           const Extent& tp) {
  constexpr double kAlignedTolerance = 15.0 * std::numbers::pi / 180.0;
  double rel = std::fmod(std::abs(wrap_angle(tp_heading - ego_heading)), std::numbers::pi);
  rel = std::min(rel, std::numbers::pi - rel);  // in [0, pi/2]
  if (rel <= kAlignedTolerance) {
    return {0.5 * (ego.length + tp.length), 0.5 * (ego.width + tp.width)};
  }
  if (rel >= 0.5 * std::numbers::pi - kAlignedTolerance) {
    return {0.5 * (ego.length + tp.width), 0.5 * (ego.width + tp.length)};
  }
  const double radius = 0.5 * std::hypot(tp.length, tp.width);
  return {0.5 * ego.length + radius, 0.5 * ego.width + radius};
}

namespace {

constexpr std::array<double, 16> kGaussNodes{
    -0.9894009349916499, -0.9445750230732326, -0.8656312023878318, -0.755404408355003,
    -0.6178762444026438, -0.45801677765722737, -0.2816035507792589, -0.09501250983763745,
    0.09501250983763745, 0.2816035507792589,  0.45801677765722737, 0.6178762444026438,
    0.755404408355003,   0.8656312023878318,  0.9445750230732326,  0.9894009349916499};
constexpr std::array<double, 16> kGaussWeights{
    0.027152459411754037, 0.062253523938647706, 0.09515851168249259, 0.12462897125553403,
    0.14959598881657676,  0.16915651939500262,  0.1826034150449236,  0.18945061045506859,
    0.18945061045506859,  0.1826034150449236,   0.16915651939500262, 0.14959598881657676,
    0.12462897125553403,  0.09515851168249259,  0.062253523938647706, 0.027152459411754037};

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace

double gaussian_mass_in_rect(const Vec2& mean, const Mat2& cov, const RectFootprint& rect) {
  // Rectangle frame: exact conditional mass across the rectangle, composite
  // 16-node Gauss-Legendre along it.
  const Mat2 rot = rotation(rect.heading);
  const Vec2 mu = rot.transpose() * (mean - rect.center());
  const Mat2 sigma = rot.transpose() * cov * rot;
  const double var_u = sigma(0, 0);
  if (!(var_u > 0.0) || !(sigma.determinant() > 0.0)) {
    throw ContractError("gaussian_mass_in_rect: covariance not positive definite");
  }
  const double sd_u = std::sqrt(var_u);
  const double slope = sigma(0, 1) / var_u;
  const double sd_cond = std::sqrt(sigma(1, 1) - sigma(0, 1) * slope);
  const double hu = 0.5 * rect.length;
  const double hv = 0.5 * rect.width;

  const double lo = std::max(-hu, mu.x() - 9.0 * sd_u);
  const double hi = std::min(hu, mu.x() + 9.0 * sd_u);
  if (!(lo < hi)) return 0.0;
  const int panels = std::clamp(static_cast<int>(std::ceil((hi - lo) / sd_u)), 1, 24);
  const double width = (hi - lo) / panels;
  const double norm = 1.0 / (sd_u * std::sqrt(2.0 * std::numbers::pi));
  double mass = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = lo + (p + 0.5) * width;
    for (std::size_t i = 0; i < kGaussNodes.size(); ++i) {
      const double u = mid + 0.5 * width * kGaussNodes[i];
      const double zu = (u - mu.x()) / sd_u;
      const double v_mean = mu.y() + slope * (u - mu.x());
      const double inner = normal_cdf((hv - v_mean) / sd_cond) - normal_cdf((-hv - v_mean) / sd_cond);
      mass += kGaussWeights[i] * 0.5 * width * norm * std::exp(-0.5 * zu * zu) * inner;
    }
  }
  return std::clamp(mass, 0.0, 1.0);
}

double cep_density(const GaussianState& tp, const Extent& tp_extent, const EgoState& ego,
                   const Extent& ego_extent, double dt) {
  if (!(dt > 0.0)) throw ContractError("cep_density: dt must be positive");
  const Eigen::SelfAdjointEigenSolver<Mat2> eig(tp.cov, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() <= 0.0) throw ContractError("cep_density: covariance not SPD");
  const Vec2 half = inflated_half_extents(ego.psi, ego_extent, tp.heading, tp_extent);
  const RectFootprint region{ego.x, ego.y, ego.psi, 2.0 * half.x(), 2.0 * half.y()};
  return gaussian_mass_in_rect(tp.mean, tp.cov, region) / dt;
}

ModeRisk cep(const ModePrediction& mode, const Extent& tp_extent, const PlanTrajectory& plan,
             const Extent& ego_extent, double dt) {
  if (mode.states.size() != plan.states.size()) throw ContractError("cep: horizon mismatch");
  ModeRisk out;
  out.density.reserve(mode.states.size());
  for (std::size_t k = 0; k < mode.states.size(); ++k) {
    const double density = cep_density(mode.states[k], tp_extent, plan.states[k], ego_extent, dt);
    out.density.push_back(density);
    out.cep_raw += density * dt;
  }
  out.cep = std::clamp(out.cep_raw, 0.0, 1.0);
  return out;
}

double RiskReport::max_cep(std::size_t tp) const {
  double best = 0.0;
  for (const ModeRisk& r : risk.at(tp)) best = std::max(best, r.cep);
  return best;
}

RiskReport assess_risk(const PredictionSet& predictions, const PlanTrajectory& plan,
                       const Extent& ego, double lambda) {
  RiskReport report;
  report.lambda = lambda;
  for (const TpPrediction& tp : predictions.tps) {
    std::vector<ModeRisk> per_mode;
    for (const ModePrediction& mode : tp.modes) {
      ModeRisk r = cep(mode, {tp.length, tp.width}, plan, ego, predictions.dt);
      r.decision = r.cep + lambda * mode.probability;
      per_mode.push_back(std::move(r));
    }
    report.risk.push_back(std::move(per_mode));
  }
  return report;
}

void ScenarioTree::validate(int max_scenarios) const {
  if (scenarios.empty() || static_cast<int>(scenarios.size()) > max_scenarios) {
    throw ContractError("ScenarioTree: scenario count outside [1, S_max]");
  }
  double total = 0.0;
  for (const Scenario& s : scenarios) total += s.weight;
  if (std::abs(total - 1.0) > 1e-6) throw ContractError("ScenarioTree: weights must sum to 1");
  if (branching_index < 0 || branching_index > std::max(horizon - 1, 0)) {
    throw ContractError("ScenarioTree: branching index outside [0, N-1]");
  }
}

namespace {

Scenario make_scenario(const PredictionSet& predictions, int joint_mode) {
  Scenario s;
  s.joint_mode = joint_mode;
  for (const TpPrediction& tp : predictions.tps) s.tp_modes.push_back(joint_member(tp, joint_mode));
  return s;
}

ScenarioTree obstacle_free_tree(const PredictionSet& predictions) {
  ScenarioTree tree;
  tree.horizon = predictions.horizon;
  tree.scenarios.push_back(Scenario{});
  return tree;
}

void normalize_weights(ScenarioTree& tree) {
  double total = 0.0;
  for (const Scenario& s : tree.scenarios) total += s.weight;
  for (Scenario& s : tree.scenarios) {
    s.weight = total > 0.0 ? s.weight / total : 1.0 / static_cast<double>(tree.scenarios.size());
  }
}

}  // namespace

ScenarioTree select_scenarios(const PredictionSet& predictions,
                              const std::vector<std::vector<int>>& clusters,
                              const RiskReport& risk, double lambda, int max_scenarios) {
  if (max_scenarios < 1) throw ContractError("select_scenarios: S_max must be >= 1");
  if (joint_mode_count(predictions) == 0) return obstacle_free_tree(predictions);
  if (clusters.empty()) throw ContractError("select_scenarios: no clusters");
  if (risk.risk.size() != predictions.tps.size()) throw ContractError("select_scenarios: risk/TP mismatch");

  auto summed_decision = [&](int joint_mode) {
    double total = 0.0;
    for (std::size_t o = 0; o < predictions.tps.size(); ++o) {
      const TpPrediction& tp = predictions.tps[o];
      const auto m = static_cast<std::size_t>(joint_member(tp, joint_mode));
      total += risk.risk[o][m].cep + lambda * tp.modes[m].probability;
    }
    return total;
  };

  std::vector<Scenario> candidates;
  for (const std::vector<int>& cluster : clusters) {
    if (cluster.empty()) throw ContractError("select_scenarios: empty cluster");
    int best = cluster.front();
    double best_value = summed_decision(best);
    double weight = 0.0;
    for (int m : cluster) {
      const double value = summed_decision(m);
      if (value > best_value || (value == best_value && m < best)) {
        best = m;
        best_value = value;
      }
      weight += joint_probability(predictions, m);
    }
    Scenario s = make_scenario(predictions, best);
    s.relevance = best_value;
    s.weight = weight;
    s.members = cluster;
    candidates.push_back(std::move(s));
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const Scenario& a, const Scenario& b) {
    if (a.relevance != b.relevance) return a.relevance > b.relevance;
    return a.joint_mode < b.joint_mode;
  });
  if (static_cast<int>(candidates.size()) > max_scenarios) {
    candidates.resize(static_cast<std::size_t>(max_scenarios));
  }
  ScenarioTree tree;
  tree.horizon = predictions.horizon;
  tree.scenarios = std::move(candidates);
  normalize_weights(tree);
  return tree;
}

ScenarioTree most_probable_scenarios(const PredictionSet& predictions, int count) {
  const int n = joint_mode_count(predictions);
  if (n == 0) return obstacle_free_tree(predictions);
  ScenarioTree tree;
  tree.horizon = predictions.horizon;
  for (int r = 0; r < std::min(count, n); ++r) {
    Scenario s = make_scenario(predictions, r);
    s.weight = joint_probability(predictions, r);
    s.members = {r};
    tree.scenarios.push_back(std::move(s));
  }
  normalize_weights(tree);
  return tree;
}

}  // namespace bmpcc
