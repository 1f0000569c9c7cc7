#include "bmpcc/prediction.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace bmpcc {

void PredictionSet::validate() const {
  if (horizon < 1) throw ContractError("PredictionSet: horizon must be >= 1");
  if (!(dt > 0.0)) throw ContractError("PredictionSet: dt must be positive");
  for (const TpPrediction& tp : tps) {
    if (tp.modes.empty()) throw ContractError("PredictionSet: TP without modes");
    double total = 0.0;
    for (std::size_t m = 0; m < tp.modes.size(); ++m) {
      const ModePrediction& mode = tp.modes[m];
      if (!(mode.probability >= 0.0 && mode.probability <= 1.0)) {
        throw ContractError("PredictionSet: mode probability outside [0, 1]");
      }
      if (m > 0 && mode.probability > tp.modes[m - 1].probability) {
        throw ContractError("PredictionSet: modes must be sorted by probability");
      }
      total += mode.probability;
      if (static_cast<int>(mode.states.size()) != horizon) {
        throw ContractError("PredictionSet: mode does not have exactly N states");
      }
      double previous_trace = 0.0;
      for (const GaussianState& g : mode.states) {
        if ((g.cov - g.cov.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
          throw ContractError("PredictionSet: covariance not symmetric");
        }
        const Eigen::SelfAdjointEigenSolver<Mat2> eig(g.cov, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() <= kSigmaMin * kSigmaMin) {
          throw ContractError("PredictionSet: covariance not positive definite");
        }
        const double trace = g.cov.trace();
        if (trace < previous_trace - 1e-12) {
          throw ContractError("PredictionSet: covariance trace decreases along the horizon");
        }
        previous_trace = trace;
      }
    }
    if (std::abs(total - 1.0) > 1e-6) throw ContractError("PredictionSet: mode probabilities must sum to 1");
  }
}

double AccelProfile::commanded(double s, double v) const {
  if (s < onset || accel == 0.0) return 0.0;
  if (accel > 0.0) return v < speed_max ? accel : 0.0;
  return v > std::max(speed_min, 0.0) ? accel : 0.0;
}

void advance_profile(const AccelProfile& profile, double dt, double& s, double& v) {
  const double a = profile.commanded(s, v);
  if (a == 0.0) {
    s += v * dt;
    return;
  }
  const double bound = a > 0.0 ? profile.speed_max : std::max(profile.speed_min, 0.0);
  const double tau = (bound - v) / a;
  if (tau >= dt) {
    s += v * dt + 0.5 * a * dt * dt;
    v += a * dt;
  } else {
    s += v * tau + 0.5 * a * tau * tau + bound * (dt - tau);
    v = bound;
  }
}

ModePrediction synth_rollout(const TpObservation& state, const ReferencePath& route,
                             const AccelProfile& profile, int horizon, double dt,
                             const PredictorConfig& config) {
  if (horizon < 1 || !(dt > 0.0)) throw ContractError("synth_rollout: bad horizon or dt");
  ModePrediction mode;
  mode.probability = 1.0;
  mode.states.reserve(static_cast<std::size_t>(horizon));
  double s = route.project({state.x, state.y});
  double v = std::max(state.speed, 0.0);
  for (int k = 0; k < horizon; ++k) {
    if (s >= route.theta_max()) {
      s = route.theta_max();
      v = 0.0;
    }
    const PathPose<double> pose = route.query(s);
    const double sigma_lon = std::max(config.sigma_lon0 + k * config.growth_lon, 2.0 * kSigmaMin);
    const double sigma_lat = std::max(config.sigma_lat0 + k * config.growth_lat, 2.0 * kSigmaMin);
    const Mat2 rot = rotation(pose.psi);
    const Eigen::Vector2d variances(sigma_lon * sigma_lon, sigma_lat * sigma_lat);
    GaussianState g;
    g.mean = {pose.x, pose.y};
    g.cov = rot * variances.asDiagonal() * rot.transpose();
    g.cov = 0.5 * (g.cov + g.cov.transpose()).eval();
    g.heading = pose.psi;
    g.speed = v;
    mode.states.push_back(g);
    advance_profile(profile, dt, s, v);
  }
  return mode;
}

namespace {

// D'Hondt allocation: every intent with weight gets one mode, extras go to the
// largest weight-per-mode quotient (ties to the earlier intent).
std::vector<int> allocate_modes(const std::vector<double>& weights, int total) {
  std::vector<int> counts(weights.size());
  int used = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    counts[i] = weights[i] > 0.0 ? 1 : 0;
    used += counts[i];
  }
  for (int extra = used; extra < total; ++extra) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < weights.size(); ++i) {
      if (weights[i] / (counts[i] + 1) > weights[best] / (counts[best] + 1)) best = i;
    }
    ++counts[best];
  }
  return counts;
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t value) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (value + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

PredictionSet predict(const Scene& scene, int horizon, double dt, const PredictorConfig& config,
                      std::uint64_t seed) {
  PredictionSet out;
  out.horizon = horizon;
  out.dt = dt;
  for (const TpScene& tp : scene.tps) {
    if (tp.history.empty()) throw ContractError("predict: TP history must be non-empty");
    if (tp.intents.empty()) throw ContractError("predict: TP without intents");
    const TpObservation& now = tp.history.back();

    std::vector<double> weights;
    for (const Intent& intent : tp.intents) weights.push_back(std::max(intent.weight, 0.0));
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) throw ContractError("predict: intent weights must not all be zero");
    for (double& w : weights) w /= total;
    const double heaviest = *std::max_element(weights.begin(), weights.end());
    for (double& w : weights) {
      if (w < config.min_intent_weight && w < heaviest) w = 0.0;
    }
    const double kept = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (double& w : weights) w /= kept;

    TpPrediction pred;
    pred.tp_id = tp.tp_id;
    pred.length = tp.length;
    pred.width = tp.width;

    if (tp.intents.size() == 1) {
      ModePrediction mode = synth_rollout(now, *tp.intents[0].route, tp.intents[0].profile, horizon,
                                          dt, config);
      mode.mode_id = 0;
      mode.probability = 1.0;
      mode.label = tp.intents[0].label;
      pred.modes.push_back(std::move(mode));
      out.tps.push_back(std::move(pred));
      continue;
    }

    const int n_modes = std::max(config.modes_per_tp, static_cast<int>(tp.intents.size()));
    const std::vector<int> counts = allocate_modes(weights, n_modes);
    std::mt19937_64 rng(mix(seed, static_cast<std::uint64_t>(tp.tp_id)));
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    int mode_id = 0;
    for (std::size_t i = 0; i < tp.intents.size(); ++i) {
      if (counts[i] == 0) continue;
      const Intent& intent = tp.intents[i];
      // Variant j receives a share proportional to 2^-j of the intent weight.
      const double share_total = 2.0 * (1.0 - std::pow(0.5, counts[i]));
      for (int j = 0; j < counts[i]; ++j) {
        AccelProfile profile = intent.profile;
        if (j > 0) {
          const double sign = (j % 2 == 1) ? 1.0 : -1.0;
          profile.accel += sign * ((j + 1) / 2) * config.jitter_accel * (1.0 + 0.25 * unit(rng));
        }
        ModePrediction mode = synth_rollout(now, *intent.route, profile, horizon, dt, config);
        mode.mode_id = mode_id++;
        mode.probability = weights[i] * std::pow(0.5, j) / share_total;
        mode.label = j == 0 ? intent.label : intent.label + "~" + std::to_string(j);
        pred.modes.push_back(std::move(mode));
      }
    }
    std::stable_sort(pred.modes.begin(), pred.modes.end(),
                     [](const ModePrediction& a, const ModePrediction& b) {
                       return a.probability > b.probability;
                     });
    out.tps.push_back(std::move(pred));
  }
  return out;
}

IntentFilter::IntentFilter(std::vector<double> prior, double accel_sigma, double floor)
    : weights_(std::move(prior)), accel_sigma_(accel_sigma), floor_(floor) {
  const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  if (weights_.empty() || !(total > 0.0) || !(accel_sigma > 0.0)) {
    throw std::invalid_argument("IntentFilter: bad prior or sigma");
  }
  for (double& w : weights_) w /= total;
}

void IntentFilter::update(std::span<const double> expected_accels, double observed_accel) {
  if (expected_accels.size() != weights_.size()) {
    throw ContractError("IntentFilter::update: one expectation per intent required");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    const double r = (observed_accel - expected_accels[i]) / accel_sigma_;
    weights_[i] *= std::exp(-0.5 * r * r);
    total += weights_[i];
  }
  if (!(total > 0.0)) {
    std::fill(weights_.begin(), weights_.end(), 1.0);
    total = static_cast<double>(weights_.size());
  }
  double renorm = 0.0;
  for (double& w : weights_) {
    w = std::max(w / total, floor_);
    renorm += w;
  }
  for (double& w : weights_) w /= renorm;
}

void write_prediction_records(const PredictionSet& predictions, std::ostream& out) {
  out << "# horizon " << predictions.horizon << " dt " << std::setprecision(17) << predictions.dt
      << '\n';
  for (const TpPrediction& tp : predictions.tps) {
    out << "# tp " << tp.tp_id << " length " << tp.length << " width " << tp.width << '\n';
  }
  out << "# tp_id,mode_id,k,mu_x,mu_y,psi,v,s11,s12,s22,pi\n";
  for (const TpPrediction& tp : predictions.tps) {
    for (const ModePrediction& mode : tp.modes) {
      for (std::size_t k = 0; k < mode.states.size(); ++k) {
        const GaussianState& g = mode.states[k];
        out << tp.tp_id << ',' << mode.mode_id << ',' << k << ',' << g.mean.x() << ','
            << g.mean.y() << ',' << g.heading << ',' << g.speed << ',' << g.cov(0, 0) << ','
            << g.cov(0, 1) << ',' << g.cov(1, 1) << ',' << mode.probability << '\n';
      }
    }
  }
}

PredictionSet read_prediction_records(std::istream& in) {
  PredictionSet out;
  std::map<int, TpPrediction> tps;
  std::vector<int> order;
  std::string line;
  auto tp_entry = [&](int id) -> TpPrediction& {
    auto [it, inserted] = tps.try_emplace(id);
    if (inserted) {
      it->second.tp_id = id;
      order.push_back(id);
    }
    return it->second;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream header(line.substr(1));
      std::string key;
      header >> key;
      if (key == "horizon") {
        std::string dt_key;
        header >> out.horizon >> dt_key >> out.dt;
      } else if (key == "tp") {
        int id = 0;
        std::string lk, wk;
        double length = 0.0, width = 0.0;
        if (header >> id >> lk >> length >> wk >> width) {
          TpPrediction& tp = tp_entry(id);
          tp.length = length;
          tp.width = width;
        }
      }
      continue;
    }
    for (char& c : line) {
      if (c == ',') c = ' ';
    }
    std::istringstream fields(line);
    int tp_id = 0, mode_id = 0;
    std::size_t k = 0;
    GaussianState g;
    double s11 = 0, s12 = 0, s22 = 0, pi = 0;
    if (!(fields >> tp_id >> mode_id >> k >> g.mean.x() >> g.mean.y() >> g.heading >> g.speed >>
          s11 >> s12 >> s22 >> pi)) {
      throw std::runtime_error("read_prediction_records: malformed record: " + line);
    }
    g.cov << s11, s12, s12, s22;
    TpPrediction& tp = tp_entry(tp_id);
    auto it = std::find_if(tp.modes.begin(), tp.modes.end(),
                           [&](const ModePrediction& m) { return m.mode_id == mode_id; });
    if (it == tp.modes.end()) {
      tp.modes.push_back({mode_id, pi, {}, {}});
      it = std::prev(tp.modes.end());
    }
    if (it->states.size() <= k) it->states.resize(k + 1);
    it->states[k] = g;
  }
  for (int id : order) {
    TpPrediction tp = std::move(tps[id]);
    std::stable_sort(tp.modes.begin(), tp.modes.end(),
                     [](const ModePrediction& a, const ModePrediction& b) {
                       return a.probability > b.probability;
                     });
    out.tps.push_back(std::move(tp));
  }
  if (out.horizon == 0 && !out.tps.empty() && !out.tps[0].modes.empty()) {
    out.horizon = static_cast<int>(out.tps[0].modes[0].states.size());
  }
  out.validate();
  return out;
}

}  // namespace bmpcc
