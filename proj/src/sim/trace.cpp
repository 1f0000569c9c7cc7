#include "bmpcc/sim/trace.hpp"

#include "json.hpp"

#include <iomanip>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace bmpcc::sim {

namespace {

using nlohmann::json;

json ego_json(const EgoState& z) {
  return {{"x", z.x}, {"y", z.y}, {"psi", z.psi}, {"v", z.v}, {"a", z.a}, {"delta", z.delta}, {"theta", z.theta}};
}

EgoState ego_from(const json& j) {
  return {j.at("x").get<double>(), j.at("y").get<double>(),     j.at("psi").get<double>(),
          j.at("v").get<double>(), j.at("a").get<double>(),     j.at("delta").get<double>(),
          j.at("theta").get<double>()};
}

json record_json(const StepRecord& rec) {
  json j;
  j["step"] = rec.step;
  j["t"] = rec.time;
  j["ego"] = ego_json(rec.ego);
  j["executed"] = rec.executed;
  if (rec.executed) {
    j["input"] = {{"jerk", rec.input.jerk}, {"steer_rate", rec.input.steer_rate}, {"path_speed", rec.input.path_speed}};
    j["fallback"] = rec.fallback;
    j["cost"] = rec.stage_cost;
    const PlanRecord& p = rec.plan;
    j["plan"] = {{"status", p.status},
                 {"iterations", p.iterations},
                 {"kkt", p.kkt_residual},
                 {"violation", p.max_violation},
                 {"solve_ms", p.solve_ms},
                 {"total_ms", p.total_ms},
                 {"branching", p.branching_index},
                 {"clusters", p.clusters},
                 {"scenarios", p.joint_modes},
                 {"weights", p.weights}};
    if (!p.branches.empty()) j["plan"]["branches"] = p.branches;
  }
  json tps = json::array();
  for (const TpRecord& tp : rec.tps) {
    tps.push_back({{"id", tp.id}, {"x", tp.x}, {"y", tp.y}, {"psi", tp.psi}, {"v", tp.v}, {"a", tp.a},
                   {"length", tp.length}, {"width", tp.width}});
  }
  j["tps"] = std::move(tps);
  j["intent_weights"] = rec.intent_weights;
  return j;
}

}  // namespace

void write_trace_jsonl(const std::vector<StepRecord>& trace, std::ostream& out) {
  for (const StepRecord& rec : trace) out << record_json(rec).dump() << '\n';
}

std::vector<StepRecord> read_trace_jsonl(std::istream& in) {
  std::vector<StepRecord> trace;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      StepRecord rec;
      rec.step = j.at("step").get<int>();
      rec.time = j.at("t").get<double>();
      rec.ego = ego_from(j.at("ego"));
      rec.executed = j.at("executed").get<bool>();
      if (rec.executed) {
        const json& u = j.at("input");
        rec.input = {u.at("jerk").get<double>(), u.at("steer_rate").get<double>(), u.at("path_speed").get<double>()};
        rec.fallback = j.at("fallback").get<bool>();
        rec.stage_cost = j.at("cost").get<double>();
        const json& p = j.at("plan");
        rec.plan.status = p.at("status").get<std::string>();
        rec.plan.iterations = p.at("iterations").get<int>();
        rec.plan.kkt_residual = p.at("kkt").get<double>();
        rec.plan.max_violation = p.at("violation").get<double>();
        rec.plan.solve_ms = p.at("solve_ms").get<double>();
        rec.plan.total_ms = p.at("total_ms").get<double>();
        rec.plan.branching_index = p.at("branching").get<int>();
        rec.plan.clusters = p.at("clusters").get<int>();
        rec.plan.joint_modes = p.at("scenarios").get<std::vector<int>>();
        rec.plan.weights = p.at("weights").get<std::vector<double>>();
        if (p.contains("branches")) {
          rec.plan.branches = p.at("branches").get<std::vector<std::vector<std::array<double, 3>>>>();
        }
      }
      for (const json& t : j.at("tps")) {
        rec.tps.push_back({t.at("id").get<int>(), t.at("x").get<double>(), t.at("y").get<double>(),
                           t.at("psi").get<double>(), t.at("v").get<double>(), t.at("a").get<double>(),
                           t.at("length").get<double>(), t.at("width").get<double>()});
      }
      rec.intent_weights = j.at("intent_weights").get<std::vector<double>>();
      trace.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw std::runtime_error("trace line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return trace;
}

void write_results_csv(const MonteCarloResult& result, std::ostream& out, bool include_timing) {
  out << "variant,runs,success_rate,aborted_rate,collision_rate,failed,mean_cost";
  if (include_timing) out << ",mean_solve_ms,max_solve_ms";
  out << '\n' << std::setprecision(10);
  for (const VariantStats& s : result.table) {
    out << to_string(s.variant) << ',' << s.runs << ',' << s.rate(s.success) << ',' << s.rate(s.aborted) << ','
        << s.rate(s.collision) << ',' << s.failed << ',' << s.mean_cost;
    if (include_timing) out << ',' << s.mean_solve_ms << ',' << s.max_solve_ms;
    out << '\n';
  }
}

void write_runs_csv(const MonteCarloResult& result, std::ostream& out, bool include_timing) {
  out << "run,variant,seed,outcome,cost,cycles,fallbacks,error";
  if (include_timing) out << ",mean_solve_ms,max_solve_ms";
  out << '\n' << std::setprecision(12);
  for (const RunSummary& r : result.runs) {
    out << r.run << ',' << to_string(r.variant) << ',' << r.seed << ','
        << (r.failed ? std::string("failed") : to_string(r.outcome)) << ',' << r.cost << ',' << r.cycles << ','
        << r.fallbacks << ',' << std::quoted(r.error);
    if (include_timing) out << ',' << r.mean_solve_ms << ',' << r.max_solve_ms;
    out << '\n';
  }
}

void write_summary(const MonteCarloResult& result, std::ostream& out) {
  out << std::left << std::setw(10) << "variant" << std::right << std::setw(6) << "runs" << std::setw(10)
      << "success" << std::setw(10) << "aborted" << std::setw(11) << "collision" << std::setw(12) << "mean cost"
      << std::setw(12) << "mean ms" << std::setw(10) << "max ms" << '\n';
  out << std::fixed;
  for (const VariantStats& s : result.table) {
    out << std::left << std::setw(10) << to_string(s.variant) << std::right << std::setw(6) << s.runs
        << std::setprecision(1) << std::setw(9) << 100.0 * s.rate(s.success) << '%' << std::setw(9)
        << 100.0 * s.rate(s.aborted) << '%' << std::setw(10) << 100.0 * s.rate(s.collision) << '%'
        << std::setw(12) << s.mean_cost << std::setw(12) << s.mean_solve_ms << std::setw(10) << s.max_solve_ms
        << '\n';
  }
  out << std::defaultfloat;
}

void write_velocity_csv(const std::vector<StepRecord>& trace, std::ostream& out) {
  out << "t,x,y,v,a,fallback\n" << std::setprecision(10);
  for (const StepRecord& rec : trace) {
    out << rec.time << ',' << rec.ego.x << ',' << rec.ego.y << ',' << rec.ego.v << ',' << rec.ego.a << ','
        << (rec.fallback ? 1 : 0) << '\n';
  }
}

void write_branches_csv(const std::vector<StepRecord>& trace, std::ostream& out) {
  out << "step,scenario,k,x,y,v\n" << std::setprecision(10);
  for (const StepRecord& rec : trace) {
    for (std::size_t s = 0; s < rec.plan.branches.size(); ++s) {
      for (std::size_t k = 0; k < rec.plan.branches[s].size(); ++k) {
        const auto& b = rec.plan.branches[s][k];
        out << rec.step << ',' << s << ',' << k << ',' << b[0] << ',' << b[1] << ',' << b[2] << '\n';
      }
    }
  }
}

}  // namespace bmpcc::sim
