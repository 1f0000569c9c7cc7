#include "bmpcc/experiment.hpp"

#include "bmpcc/sim/monte_carlo.hpp"
#include "bmpcc/sim/trace.hpp"

#include "json.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <functional>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace bmpcc {

namespace {

namespace fs = std::filesystem;

void write_file(const fs::path& dir, const std::string& name, ExperimentReport& report,
                const std::function<void(std::ostream&)>& body) {
  std::ofstream out(dir / name);
  if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
  body(out);
  report.artifacts.push_back(name);
}

std::string hex(std::uint64_t value) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << value;
  return s.str();
}

}  // namespace

PlannerSetup make_setup(const ExperimentConfig& config, PlannerVariant variant,
                        std::shared_ptr<const ReferencePath> path) {
  PlannerSetup setup;
  setup.variant = variant;
  setup.config = config.planner;
  setup.path = std::move(path);
  return setup;
}

std::vector<CaseResult> run_cases(const ExperimentConfig& config) {
  config.validate();
  std::vector<std::pair<std::string, sim::World>> worlds;
  if (config.scenario == sim::ScenarioKind::intersection) {
    worlds.emplace_back("turn", sim::intersection_world(config.intersection, false));
    worlds.emplace_back("cross", sim::intersection_world(config.intersection, true));
  } else if (config.scenario == sim::ScenarioKind::custom) {
    auto path = std::make_shared<ReferencePath>(load_path_file(config.path_file));
    worlds.emplace_back("custom", sim::custom_world(path, config.custom_speed, config.custom_duration));
  } else {
    throw ConfigError("scenario: run_cases handles intersection and custom scenarios");
  }
  std::vector<CaseResult> out;
  for (PlannerVariant variant : config.variants) {
    for (const auto& [label, world] : worlds) {
      CaseResult c;
      c.label = label;
      c.variant = variant;
      try {
        c.run = sim::run_closed_loop(world, make_setup(config, variant, world.ego_path), config.seed, config.loop);
      } catch (const std::exception& e) {
        c.failed = true;
        c.error = e.what();
      }
      out.push_back(std::move(c));
    }
  }
  return out;
}

sim::MonteCarloConfig monte_carlo_config(const ExperimentConfig& config) {
  sim::MonteCarloConfig mc;
  mc.n_runs = config.n_runs;
  mc.variants = config.variants;
  mc.seed = config.seed;
  mc.workers = config.workers;
  mc.merging = config.merging;
  mc.idm = config.idm;
  mc.planner = config.planner;
  mc.loop = config.loop;
  return mc;
}

ExperimentReport run_experiment(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  const fs::path dir(config.output_dir);
  fs::create_directories(dir);
  ExperimentReport report;

  if (config.scenario == sim::ScenarioKind::merging) {
    const sim::MonteCarloConfig mc = monte_carlo_config(config);
    int last_percent = -1;
    const sim::MonteCarloResult result = sim::monte_carlo(mc, [&](int done, int total) {
      const int percent = 100 * done / total;
      if (percent / 10 != last_percent / 10) log << "  " << done << "/" << total << " runs\n" << std::flush;
      last_percent = percent;
    });
    for (const sim::RunSummary& r : result.runs) {
      if (r.failed) {
        ++report.failed_runs;
        log << "run " << r.run << " (" << to_string(r.variant) << ") failed: " << r.error << '\n';
      }
    }
    write_file(dir, "results.csv", report, [&](std::ostream& o) { sim::write_results_csv(result, o); });
    write_file(dir, "runs.csv", report, [&](std::ostream& o) { sim::write_runs_csv(result, o); });
    write_file(dir, "summary.txt", report, [&](std::ostream& o) { sim::write_summary(result, o); });
    sim::write_summary(result, log);
  } else {
    const std::vector<CaseResult> cases = run_cases(config);
    fs::create_directories(dir / "traces");
    write_file(dir, "results.csv", report, [&](std::ostream& o) {
      o << "variant,case,outcome,cost,min_accel,fallbacks,cycles,mean_solve_ms,max_solve_ms,error\n"
        << std::setprecision(10);
      for (const CaseResult& c : cases) {
        double mean = 0.0;
        double max = 0.0;
        for (double ms : c.run.solve_ms) {
          mean += ms;
          max = std::max(max, ms);
        }
        if (!c.run.solve_ms.empty()) mean /= static_cast<double>(c.run.solve_ms.size());
        o << to_string(c.variant) << ',' << c.label << ','
          << (c.failed ? std::string("failed") : sim::to_string(c.run.outcome)) << ',' << c.run.cost << ','
          << c.run.min_accel << ',' << c.run.fallbacks << ',' << c.run.solve_ms.size() << ',' << mean << ','
          << max << ',' << std::quoted(c.error) << '\n';
      }
    });
    for (const CaseResult& c : cases) {
      if (c.failed) {
        ++report.failed_runs;
        log << to_string(c.variant) << "/" << c.label << " failed: " << c.error << '\n';
        continue;
      }
      const std::string stem = "traces/" + to_string(c.variant) + "-" + c.label;
      write_file(dir, stem + ".jsonl", report, [&](std::ostream& o) { sim::write_trace_jsonl(c.run.trace, o); });
      write_file(dir, stem + "-velocity.csv", report, [&](std::ostream& o) { sim::write_velocity_csv(c.run.trace, o); });
      if (config.loop.record_branches) {
        write_file(dir, stem + "-branches.csv", report, [&](std::ostream& o) { sim::write_branches_csv(c.run.trace, o); });
      }
      log << std::left << std::setw(8) << to_string(c.variant) << std::setw(8) << c.label << sim::to_string(c.run.outcome)
          << "  cost " << std::fixed << std::setprecision(1) << c.run.cost << "  min accel "
          << std::setprecision(2) << c.run.min_accel << std::defaultfloat << '\n';
    }
  }

  nlohmann::json manifest;
  manifest["config_hash"] = hex(config_hash(config));
  manifest["seed"] = config.seed;
  manifest["scenario"] = sim::to_string(config.scenario);
  manifest["versions"] = {{"bmpcc", "1.0.0"},
                          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                        "." + std::to_string(EIGEN_MINOR_VERSION)},
                          {"compiler", __VERSION__},
                          {"cxx", static_cast<long>(__cplusplus)}};
  manifest["config"] = nlohmann::json::parse(echo_config(config));
  manifest["failed_runs"] = report.failed_runs;
  report.artifacts.push_back("manifest.json");
  manifest["artifacts"] = report.artifacts;
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
  return report;
}

}  // namespace bmpcc
