#include "bmpcc/config.hpp"

#include "json.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace bmpcc {

namespace {

using nlohmann::json;

// Value conversions ----------------------------------------------------------

void from(const json& j, double& v) {
  if (!j.is_number()) throw ConfigError("expected a number");
  v = j.get<double>();
}
void from(const json& j, int& v) {
  if (!j.is_number_integer()) throw ConfigError("expected an integer");
  v = j.get<int>();
}
void from(const json& j, std::uint64_t& v) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    throw ConfigError("expected a non-negative integer");
  }
  v = j.get<std::uint64_t>();
}
void from(const json& j, bool& v) {
  if (!j.is_boolean()) throw ConfigError("expected true or false");
  v = j.get<bool>();
}
void from(const json& j, std::string& v) {
  if (!j.is_string()) throw ConfigError("expected a string");
  v = j.get<std::string>();
}
void from(const json& j, std::array<double, 2>& v) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("expected [lo, hi]");
  from(j[0], v[0]);
  from(j[1], v[1]);
}
template <int Dim>
void from(const json& j, Eigen::Matrix<double, Dim, Dim>& m) {
  if (!j.is_array() || j.size() != Dim) throw ConfigError("expected a " + std::to_string(Dim) + "x" + std::to_string(Dim) + " matrix");
  for (int r = 0; r < Dim; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || row.size() != Dim) throw ConfigError("expected a " + std::to_string(Dim) + "x" + std::to_string(Dim) + " matrix");
    for (int c = 0; c < Dim; ++c) from(row[static_cast<std::size_t>(c)], m(r, c));
  }
}
void from(const json& j, sim::ScenarioKind& v) {
  std::string name;
  from(j, name);
  try {
    v = sim::parse_scenario_kind(name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}
void from(const json& j, std::vector<PlannerVariant>& v) {
  if (!j.is_array()) throw ConfigError("expected a list of variant names");
  v.clear();
  for (const json& item : j) {
    std::string name;
    from(item, name);
    try {
      v.push_back(parse_variant(name));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
}

template <class T>
json to(const T& v) {
  return v;
}
template <int Dim>
json to(const Eigen::Matrix<double, Dim, Dim>& m) {
  json rows = json::array();
  for (int r = 0; r < Dim; ++r) {
    json row = json::array();
    for (int c = 0; c < Dim; ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}
json to(const sim::ScenarioKind& v) { return sim::to_string(v); }
json to(const std::vector<PlannerVariant>& v) {
  json out = json::array();
  for (PlannerVariant p : v) out.push_back(to_string(p));
  return out;
}

// Archives -------------------------------------------------------------------

class Reader {
 public:
  Reader(const json& j, std::string prefix, std::vector<std::string>& warnings)
      : j_(j), prefix_(std::move(prefix)), warnings_(warnings) {}

  template <class T>
  void field(const char* key, T& value) {
    known_.emplace_back(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      from(*it, value);
    } catch (const ConfigError& e) {
      throw ConfigError(prefix_ + key + ": " + e.what());
    } catch (const json::exception& e) {
      throw ConfigError(prefix_ + key + ": " + e.what());
    }
  }

  template <class Body>
  void object(const char* key, Body&& body) {
    known_.emplace_back(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    if (!it->is_object()) throw ConfigError(prefix_ + key + ": expected an object");
    Reader sub(*it, prefix_ + key + ".", warnings_);
    body(sub);
    sub.finish();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (std::find(known_.begin(), known_.end(), it.key()) != known_.end()) continue;
      std::string accepted;
      for (const std::string& k : known_) accepted += (accepted.empty() ? "" : ", ") + k;
      warnings_.push_back("unknown key '" + prefix_ + it.key() + "' ignored; accepted keys: " + accepted);
    }
  }

 private:
  const json& j_;
  std::string prefix_;
  std::vector<std::string>& warnings_;
  std::vector<std::string> known_;
};

class Writer {
 public:
  explicit Writer(json& j) : j_(j) {}

  template <class T>
  void field(const char* key, T& value) {
    j_[key] = to(value);
  }

  template <class Body>
  void object(const char* key, Body&& body) {
    json sub = json::object();
    Writer w(sub);
    body(w);
    j_[key] = std::move(sub);
  }

 private:
  json& j_;
};

template <class Archive>
void visit(Archive& ar, ExperimentConfig& c) {
  PlannerConfig& p = c.planner;
  ar.field("scenario", c.scenario);
  ar.field("variants", c.variants);
  ar.field("horizon", p.horizon);
  ar.field("dt", p.dt);
  ar.field("max_scenarios", p.max_scenarios);
  ar.field("lambda", p.lambda);
  ar.field("bhattacharyya_threshold", p.postponing.threshold);
  ar.field("relevance_cep", p.postponing.relevance_cep);
  ar.field("n_runs", c.n_runs);
  ar.field("seed", c.seed);
  ar.field("workers", c.workers);
  ar.field("output_dir", c.output_dir);
  ar.field("path_file", c.path_file);
  ar.field("custom_speed", c.custom_speed);
  ar.field("custom_duration", c.custom_duration);
  ar.object("weights", [&](auto& a) {
    a.field("Q", p.weights.Q);
    a.field("q_v", p.weights.q_v);
    a.field("R", p.weights.R);
    a.field("q_ob", p.weights.q_ob);
    a.field("q_lm", p.weights.q_lm);
    a.field("sigma", p.weights.sigma);
  });
  ar.object("limits", [&](auto& a) {
    VehicleLimits& l = p.limits;
    a.field("jerk_min", l.jerk_min);
    a.field("jerk_max", l.jerk_max);
    a.field("steer_rate_min", l.steer_rate_min);
    a.field("steer_rate_max", l.steer_rate_max);
    a.field("steer_min", l.steer_min);
    a.field("steer_max", l.steer_max);
    a.field("accel_lon_max", l.accel_lon_max);
    a.field("accel_lat_max", l.accel_lat_max);
    a.field("path_speed_max", l.path_speed_max);
    a.field("speed_max", l.speed_max);
    a.field("wheelbase", l.wheelbase);
    a.field("length", l.length);
    a.field("width", l.width);
  });
  ar.object("solver", [&](auto& a) {
    TreeSolverOptions& s = p.solver;
    a.field("max_iterations", s.max_iterations);
    a.field("kkt_tolerance", s.kkt_tolerance);
    a.field("feasibility_tolerance", s.feasibility_tolerance);
    a.field("penalty_initial", s.penalty_initial);
    a.field("penalty_max", s.penalty_max);
    a.field("inner_iterations", s.inner_iterations);
  });
  ar.object("mpcc", [&](auto& a) {
    a.field("margin", p.mpcc.margin);
    a.field("overshoot_weight", p.mpcc.overshoot_weight);
    a.field("hard_obstacles", p.mpcc.hard_obstacles);
  });
  ar.object("predictor", [&](auto& a) {
    PredictorConfig& q = p.predictor;
    a.field("sigma_lon0", q.sigma_lon0);
    a.field("sigma_lat0", q.sigma_lat0);
    a.field("growth_lon", q.growth_lon);
    a.field("growth_lat", q.growth_lat);
    a.field("modes_per_tp", q.modes_per_tp);
    a.field("jitter_accel", q.jitter_accel);
    a.field("min_intent_weight", q.min_intent_weight);
  });
  ar.object("loop", [&](auto& a) {
    a.field("fallback_decel", c.loop.fallback_decel);
    a.field("filter_sigma", c.loop.filter_sigma);
    a.field("filter_floor", c.loop.filter_floor);
    a.field("history", c.loop.history);
    a.field("record_branches", c.loop.record_branches);
  });
  ar.object("idm", [&](auto& a) {
    a.field("v0", c.idm.v0);
    a.field("T", c.idm.T);
    a.field("s0", c.idm.s0);
    a.field("a", c.idm.a);
    a.field("b", c.idm.b);
    a.field("delta", c.idm.delta);
  });
  ar.object("intersection", [&](auto& a) {
    sim::IntersectionParams& i = c.intersection;
    a.field("lane_width", i.lane_width);
    a.field("ego_speed", i.ego_speed);
    a.field("ego_distance", i.ego_distance);
    a.field("tp_speed", i.tp_speed);
    a.field("tp_distance", i.tp_distance);
    a.field("turn_radius", i.turn_radius);
    a.field("turn_onset", i.turn_onset);
    a.field("turn_decel", i.turn_decel);
    a.field("turn_speed", i.turn_speed);
    a.field("turn_prior", i.turn_prior);
    a.field("duration", i.duration);
    a.field("clear_distance", i.clear_distance);
  });
  ar.object("merging", [&](auto& a) {
    sim::MergingParams& m = c.merging;
    a.field("lane_width", m.lane_width);
    a.field("ramp_start", m.ramp_start);
    a.field("ramp_end", m.ramp_end);
    a.field("taper", m.taper);
    a.field("ego_speed", m.ego_speed);
    a.field("duration", m.duration);
    a.field("tps_min", m.tps_min);
    a.field("tps_max", m.tps_max);
    a.field("first_offset_min", m.first_offset_min);
    a.field("first_offset_max", m.first_offset_max);
    a.field("spacing_min", m.spacing_min);
    a.field("spacing_max", m.spacing_max);
    a.field("yield_accel", m.yield_accel);
    a.field("accelerate_accel", m.accelerate_accel);
    a.field("speed_band", m.speed_band);
    a.field("onset_min", m.onset_min);
    a.field("onset_max", m.onset_max);
    a.field("prior_yield", m.prior_yield);
    a.field("prior_maintain", m.prior_maintain);
    a.field("prior_accelerate", m.prior_accelerate);
  });
}

template <class Fn>
void checked(const char* section, Fn&& fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(section) + ": " + e.what());
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (planner.horizon < 2) throw ConfigError("horizon: must be >= 2");
  if (!(planner.dt > 0.0)) throw ConfigError("dt: must be > 0");
  if (planner.max_scenarios < 1) throw ConfigError("max_scenarios: must be >= 1");
  if (!(planner.lambda >= 0.0)) throw ConfigError("lambda: must be >= 0");
  if (!(planner.postponing.threshold > 0.0)) throw ConfigError("bhattacharyya_threshold: must be > 0");
  if (!(planner.postponing.relevance_cep >= 0.0 && planner.postponing.relevance_cep <= 1.0)) {
    throw ConfigError("relevance_cep: must lie in [0, 1]");
  }
  if (variants.empty()) throw ConfigError("variants: at least one planner variant required");
  if (n_runs < 1) throw ConfigError("n_runs: must be >= 1");
  if (workers < 1) throw ConfigError("workers: must be >= 1");
  if (output_dir.empty()) throw ConfigError("output_dir: must not be empty");
  if (planner.predictor.modes_per_tp < 1) throw ConfigError("predictor.modes_per_tp: must be >= 1");
  if (!(planner.predictor.min_intent_weight >= 0.0 && planner.predictor.min_intent_weight < 1.0)) {
    throw ConfigError("predictor.min_intent_weight: must lie in [0, 1)");
  }
  if (planner.solver.max_iterations < 1) throw ConfigError("solver.max_iterations: must be >= 1");
  if (!(planner.solver.kkt_tolerance > 0.0)) throw ConfigError("solver.kkt_tolerance: must be > 0");
  if (!(loop.fallback_decel > 0.0)) throw ConfigError("loop.fallback_decel: must be > 0");
  if (!(loop.filter_sigma > 0.0)) throw ConfigError("loop.filter_sigma: must be > 0");
  if (!(loop.filter_floor >= 0.0 && loop.filter_floor < 1.0)) throw ConfigError("loop.filter_floor: must lie in [0, 1)");
  if (loop.history < 1) throw ConfigError("loop.history: must be >= 1");
  checked("weights", [&] { planner.weights.validate(); });
  checked("limits", [&] { planner.limits.validate(); });
  checked("idm", [&] { idm.validate(); });
  switch (scenario) {
    case sim::ScenarioKind::intersection:
      checked("intersection", [&] { intersection.validate(); });
      break;
    case sim::ScenarioKind::merging:
      checked("merging", [&] { merging.validate(); });
      break;
    case sim::ScenarioKind::custom:
      if (path_file.empty()) throw ConfigError("path_file: required for the custom scenario");
      if (!std::filesystem::is_regular_file(path_file)) throw ConfigError("path_file: '" + path_file + "' does not exist");
      if (!(custom_speed >= 0.0)) throw ConfigError("custom_speed: must be >= 0");
      if (!(custom_duration > 0.0)) throw ConfigError("custom_duration: must be > 0");
      break;
  }
}

LoadedConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  LoadedConfig out;
  Reader reader(j, "", out.warnings);
  visit(reader, out.config);
  reader.finish();
  out.config.validate();
  return out;
}

LoadedConfig load_config(const std::string& filename) {
  std::ifstream in(filename);
  if (!in) throw ConfigError("cannot open configuration '" + filename + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string echo_config(const ExperimentConfig& config) {
  ExperimentConfig copy = config;
  json j = json::object();
  Writer writer(j);
  visit(writer, copy);
  return j.dump(2);
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : echo_config(config)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace bmpcc
