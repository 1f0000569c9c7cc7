#pragma once

#include "bmpcc/sim/closed_loop.hpp"
#include "bmpcc/sim/monte_carlo.hpp"

#include <iosfwd>
#include <vector>

namespace bmpcc::sim {

/// One JSON object per line and step.
void write_trace_jsonl(const std::vector<StepRecord>& trace, std::ostream& out);
/// Throws std::runtime_error on malformed lines.
std::vector<StepRecord> read_trace_jsonl(std::istream& in);

/// Per-variant table: rates, mean cost and solve times.
void write_results_csv(const MonteCarloResult& result, std::ostream& out, bool include_timing = true);
/// One row per (run, variant).
void write_runs_csv(const MonteCarloResult& result, std::ostream& out, bool include_timing = true);
void write_summary(const MonteCarloResult& result, std::ostream& out);

/// Plot data: executed ego speed and acceleration over time.
void write_velocity_csv(const std::vector<StepRecord>& trace, std::ostream& out);
/// Plot data: planned branch states per cycle (needs recorded branches).
void write_branches_csv(const std::vector<StepRecord>& trace, std::ostream& out);

}  // namespace bmpcc::sim
