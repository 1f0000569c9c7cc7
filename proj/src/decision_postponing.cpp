#include "bmpcc/decision_postponing.hpp"

#include <algorithm>
#include <stdexcept>

namespace bmpcc {

void PostponingConfig::validate() const {
  if (!(threshold > 0.0)) throw std::invalid_argument("PostponingConfig: threshold must be positive");
  if (!(relevance_cep >= 0.0 && relevance_cep <= 1.0)) {
    throw std::invalid_argument("PostponingConfig: relevance threshold outside [0, 1]");
  }
}

int first_distinguishable_step(const ModePrediction& a, const ModePrediction& b, double threshold) {
  if (a.states.size() != b.states.size() || a.states.empty()) {
    throw ContractError("first_distinguishable_step: horizon mismatch");
  }
  const int horizon = static_cast<int>(a.states.size());
  for (int k = 0; k < horizon; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    if (bhattacharyya(a.states[idx], b.states[idx]) >= threshold) return k;
  }
  return horizon - 1;
}

BranchingResult branching_time(const ScenarioTree& tree, const PredictionSet& predictions,
                               const RiskReport& risk, const PostponingConfig& config) {
  if (tree.scenarios.empty()) throw ContractError("branching_time: empty scenario tree");
  BranchingResult result;
  if (tree.scenarios.size() == 1 || predictions.tps.empty()) return result;
  const int last = std::max(predictions.horizon - 1, 0);

  std::vector<std::size_t> relevant;
  for (std::size_t o = 0; o < predictions.tps.size(); ++o) {
    if (risk.max_cep(o) >= config.relevance_cep) relevant.push_back(o);
  }
  if (relevant.empty()) {
    for (std::size_t o = 0; o < predictions.tps.size(); ++o) relevant.push_back(o);
  }

  int branching = 0;
  for (std::size_t i = 0; i < tree.scenarios.size(); ++i) {
    for (std::size_t j = i + 1; j < tree.scenarios.size(); ++j) {
      // A TP following the same mode in both scenarios cannot tell them apart
      // and does not delay the branch, unless no relevant TP differs at all.
      int pair_step = -1;
      int identical_step = -1;
      for (std::size_t o : relevant) {
        const TpPrediction& tp = predictions.tps[o];
        const int mi = tree.scenarios[i].tp_modes.at(o);
        const int mj = tree.scenarios[j].tp_modes.at(o);
        const int step = first_distinguishable_step(tp.modes[static_cast<std::size_t>(mi)],
                                                    tp.modes[static_cast<std::size_t>(mj)],
                                                    config.threshold);
        result.crossings.push_back({static_cast<int>(o), static_cast<int>(i), static_cast<int>(j), step});
        if (mi == mj) {
          identical_step = std::max(identical_step, step);
        } else {
          pair_step = std::max(pair_step, step);
        }
      }
      if (pair_step < 0) pair_step = identical_step;
      branching = std::max(branching, pair_step);
    }
  }
  result.index = std::clamp(branching, 0, last);
  return result;
}

}  // namespace bmpcc
