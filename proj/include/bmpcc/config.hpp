#pragma once

#include "bmpcc/planner.hpp"
#include "bmpcc/sim/closed_loop.hpp"
#include "bmpcc/sim/idm.hpp"
#include "bmpcc/sim/scenarios.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace bmpcc {

/// Schema or value error in an experiment configuration. The message names the field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct ExperimentConfig {
  sim::ScenarioKind scenario = sim::ScenarioKind::intersection;
  std::vector<PlannerVariant> variants{PlannerVariant::full, PlannerVariant::cmpcc};
  PlannerConfig planner;
  int n_runs = 1;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string output_dir = "out";
  std::string path_file;  ///< custom scenario only
  double custom_speed = 10.0;
  double custom_duration = 20.0;
  sim::IdmRanges idm;
  sim::IntersectionParams intersection;
  sim::MergingParams merging;
  sim::ClosedLoopOptions loop;

  /// Throws ConfigError.
  void validate() const;
};

struct LoadedConfig {
  ExperimentConfig config;
  std::vector<std::string> warnings;  ///< unknown keys
};

/// Parses JSON text; absent fields keep their defaults. Throws ConfigError.
LoadedConfig parse_config(const std::string& text);
LoadedConfig load_config(const std::string& filename);

/// Fully defaulted configuration as JSON. Parsing the dump yields the same configuration.
std::string echo_config(const ExperimentConfig& config);

/// FNV-1a hash of the echoed configuration.
std::uint64_t config_hash(const ExperimentConfig& config);

}  // namespace bmpcc
