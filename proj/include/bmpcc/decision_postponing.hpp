#pragma once

#include "bmpcc/geometry.hpp"
#include "bmpcc/prediction.hpp"
#include "bmpcc/scenario_selection.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <vector>

namespace bmpcc {

struct PostponingConfig {
  double threshold = 1.0;       ///< Bhattacharyya distance that counts as distinguishable
  double relevance_cep = 0.01;  ///< TPs below this CEP are ignored

  void validate() const;
};

/// Bhattacharyya distance between two Gaussians:
///   1/8 d^T S^-1 d + 1/2 ln(det S / sqrt(det S_i det S_j)),  S = (S_i + S_j) / 2.
template <int Dim>
double bhattacharyya(const Eigen::Matrix<double, Dim, 1>& mean_i,
                     const Eigen::Matrix<double, Dim, Dim>& cov_i,
                     const Eigen::Matrix<double, Dim, 1>& mean_j,
                     const Eigen::Matrix<double, Dim, Dim>& cov_j) {
  const Eigen::Matrix<double, Dim, Dim> mean_cov = 0.5 * (cov_i + cov_j);
  const Eigen::LLT<Eigen::Matrix<double, Dim, Dim>> llt(mean_cov);
  const Eigen::LLT<Eigen::Matrix<double, Dim, Dim>> llt_i(cov_i);
  const Eigen::LLT<Eigen::Matrix<double, Dim, Dim>> llt_j(cov_j);
  if (llt.info() != Eigen::Success || llt_i.info() != Eigen::Success ||
      llt_j.info() != Eigen::Success) {
    throw ContractError("bhattacharyya: covariances must be positive definite");
  }
  auto log_det = [](const auto& factor) {
    return 2.0 * factor.matrixLLT().diagonal().array().log().sum();
  };
  const Eigen::Matrix<double, Dim, 1> diff = mean_i - mean_j;
  const double mahalanobis = diff.dot(llt.solve(diff));
  return 0.125 * mahalanobis + 0.5 * (log_det(llt) - 0.5 * (log_det(llt_i) + log_det(llt_j)));
}

inline double bhattacharyya(const GaussianState& a, const GaussianState& b) {
  return bhattacharyya<2>(a.mean, a.cov, b.mean, b.cov);
}

/// First step at which two modes become distinguishable, or horizon-1.
int first_distinguishable_step(const ModePrediction& a, const ModePrediction& b, double threshold);

struct PairCrossing {
  int tp = 0;
  int scenario_i = 0;
  int scenario_j = 0;
  int step = 0;
};

struct BranchingResult {
  int index = 0;
  std::vector<PairCrossing> crossings;
};

/// Branching index from the distinguishability of the selected scenarios:
/// the latest first-crossing step over relevant TPs and scenario pairs.
BranchingResult branching_time(const ScenarioTree& tree, const PredictionSet& predictions,
                               const RiskReport& risk, const PostponingConfig& config);

}  // namespace bmpcc
