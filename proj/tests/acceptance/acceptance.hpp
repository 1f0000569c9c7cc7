#pragma once

// Each acceptance criterion is one executable: doctest runs the checks, and
// the main prints a single verdict line that also enforces the time budget.

#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include <chrono>
#include <cstdio>

namespace acceptance {

inline int run(int argc, char** argv, const char* name, double budget_s) {
  doctest::Context context(argc, argv);
  const auto start = std::chrono::steady_clock::now();
  const int failures = context.run();
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = seconds < budget_s;
  const bool pass = failures == 0 && in_time && !context.shouldExit();
  std::printf("ACCEPTANCE %s: %s (%.2f s, budget %.0f s%s)\n", name, pass ? "PASS" : "FAIL", seconds, budget_s,
              in_time ? "" : ", over budget");
  return pass ? 0 : 1;
}

}  // namespace acceptance
