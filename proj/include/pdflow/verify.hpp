#ifndef PDFLOW_VERIFY_HPP
#define PDFLOW_VERIFY_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pdflow {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// Randomized property suites. Each suite draws from its own generator seeded
/// with (seed, suite id), so results are reproducible and independent of which
/// suites are enabled.
struct VerifyOptions {
  std::uint64_t seed = 42;
  std::size_t oracle_trials = 1000;
  std::size_t dynamics_trials = 100;
  std::size_t coincide_trials = 20;
  std::size_t kernel_trials = 20;
  std::size_t radial_trials = 20;
  std::size_t droop_trials = 20;
  std::size_t shift_trials = 20;
  std::optional<std::filesystem::path> fixture;  // nine-bus style scenario
  // Test hook: shifts the oracle multiplier so that the oracle/dynamics
  // agreement check must fail.
  double oracle_corruption = 0.0;

  static VerifyOptions with_trials(std::size_t trials, std::uint64_t seed);
};

CriterionResult check_oracle_kkt(const VerifyOptions& opt);
/// Criteria 2-4 share their runs; returns three results.
std::vector<CriterionResult> check_dynamics(const VerifyOptions& opt);
CriterionResult check_coinciding_fields(const VerifyOptions& opt);
CriterionResult check_edge_kernel(const VerifyOptions& opt);
CriterionResult check_radial_uniqueness(const VerifyOptions& opt);
CriterionResult check_droop_equivalence(const VerifyOptions& opt);
CriterionResult check_shift_invariance(const VerifyOptions& opt);
CriterionResult check_fixture(const std::filesystem::path& scenario);

std::vector<CriterionResult> run_verification(const VerifyOptions& opt);

/// "[PASS] 3 name (1.2 s): detail" per line.
void print_results(std::ostream& os, const std::vector<CriterionResult>& results);

}  // namespace pdflow

#endif  // PDFLOW_VERIFY_HPP
