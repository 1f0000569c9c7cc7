#include "bmpcc/config.hpp"
#include "bmpcc/experiment.hpp"
#include "bmpcc/prediction.hpp"
#include "bmpcc/sim/scenarios.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

bmpcc::LoadedConfig load_or_die(const std::string& path) {
  bmpcc::LoadedConfig loaded = bmpcc::load_config(path);
  for (const std::string& w : loaded.warnings) std::cerr << "warning: " << w << '\n';
  return loaded;
}

std::vector<bmpcc::PlannerVariant> parse_variants(const std::string& list) {
  std::vector<bmpcc::PlannerVariant> out;
  std::stringstream in(list);
  std::string name;
  while (std::getline(in, name, ',')) {
    if (!name.empty()) out.push_back(bmpcc::parse_variant(name));
  }
  return out;
}

bmpcc::Scene initial_scene(const bmpcc::sim::World& world) {
  bmpcc::Scene scene;
  for (const bmpcc::sim::TpAgent& tp : world.tps) {
    bmpcc::TpScene ts;
    ts.tp_id = tp.id;
    ts.length = tp.length;
    ts.width = tp.width;
    ts.history.push_back(tp.observe(0.0));
    ts.intents = tp.hypotheses;
    scene.tps.push_back(ts);
  }
  return scene;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Branch MPCC planner: closed-loop experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> output_dir;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variants;
  auto* run = app.add_subcommand("run", "Run the experiment described by a configuration file");
  run->add_option("config", config_path, "Configuration file (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--output", output_dir, "Output directory (overrides output_dir)");
  run->add_option("-j,--workers", workers, "Worker threads (overrides workers)")->check(CLI::PositiveNumber);
  run->add_option("-s,--seed", seed, "Master seed (overrides seed)");
  run->add_option("-v,--variants", variants, "Comma-separated planner variants (overrides variants)");

  std::string echo_path;
  auto* echo = app.add_subcommand("echo", "Validate a configuration and print it with all defaults");
  echo->add_option("config", echo_path, "Configuration file (JSON)")->required()->check(CLI::ExistingFile);

  std::string predict_path;
  std::string predict_out;
  auto* predict = app.add_subcommand("predict", "Write the initial multi-modal prediction of the configured scenario");
  predict->add_option("config", predict_path, "Configuration file (JSON)")->required()->check(CLI::ExistingFile);
  predict->add_option("-o,--output", predict_out, "Output file (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      bmpcc::ExperimentConfig config = load_or_die(config_path).config;
      if (output_dir) config.output_dir = *output_dir;
      if (workers) config.workers = *workers;
      if (seed) config.seed = *seed;
      if (variants) config.variants = parse_variants(*variants);
      config.validate();
      const bmpcc::ExperimentReport report = bmpcc::run_experiment(config, std::cout);
      std::cout << "wrote " << report.artifacts.size() << " files to " << config.output_dir << '\n';
      return report.failed_runs == 0 ? 0 : 3;
    }
    if (*echo) {
      std::cout << bmpcc::echo_config(load_or_die(echo_path).config) << '\n';
      return 0;
    }
    if (*predict) {
      const bmpcc::ExperimentConfig config = load_or_die(predict_path).config;
      bmpcc::sim::World world;
      switch (config.scenario) {
        case bmpcc::sim::ScenarioKind::intersection:
          world = bmpcc::sim::intersection_world(config.intersection, true);
          break;
        case bmpcc::sim::ScenarioKind::merging:
          world = bmpcc::sim::merging_world(config.merging, config.idm, config.seed);
          break;
        case bmpcc::sim::ScenarioKind::custom:
          break;
      }
      const bmpcc::PredictionSet pred = bmpcc::predict(initial_scene(world), config.planner.horizon,
                                                       config.planner.dt, config.planner.predictor, config.seed);
      if (predict_out.empty()) {
        bmpcc::write_prediction_records(pred, std::cout);
      } else {
        std::ofstream out(predict_out);
        bmpcc::write_prediction_records(pred, out);
      }
      return 0;
    }
  } catch (const bmpcc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
