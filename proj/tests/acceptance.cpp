// Acceptance suite: one line per criterion, nonzero exit if any fails.
// Trial counts and the seed are fixed here; thresholds live in verify.cpp.

#include "pdflow/verify.hpp"

#include <filesystem>
#include <iostream>

int main() {
  pdflow::VerifyOptions opt;
  opt.seed = 42;
  opt.oracle_trials = 1000;
  opt.dynamics_trials = 100;
  opt.coincide_trials = 20;
  opt.kernel_trials = 20;
  opt.radial_trials = 20;
  opt.droop_trials = 20;
  opt.shift_trials = 20;
  opt.fixture = std::filesystem::path(PDFLOW_DATA_DIR) / "nine_bus.scenario";

  const auto results = pdflow::run_verification(opt);
  pdflow::print_results(std::cout, results);

  std::size_t failed = 0;
  for (const auto& r : results) failed += r.passed ? 0 : 1;
  std::cout << (results.size() - failed) << "/" << results.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
