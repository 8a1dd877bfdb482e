#ifndef PDFLOW_SCENARIO_HPP
#define PDFLOW_SCENARIO_HPP

#include "pdflow/dynamics.hpp"
#include "pdflow/problem.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pdflow {

struct LoadSegment {
  double t_start = 0.0;  // s
  Eigen::VectorXd p_load;
};

struct SimSettings {
  double h = 1e-3;
  double t_end = 0.0;
  std::size_t sample_every = 100;
};

/// Network, converter data and a piecewise-constant load schedule. Every
/// segment has been checked against both feasibility assumptions.
struct Scenario {
  NetworkGraph<double> graph;
  NodeParameters<double> converters;
  double base_power = 100.0;  // MVA
  std::vector<LoadSegment> schedule;
  SimSettings sim;
  std::optional<PrimalDualState<double>> initial;

  std::size_t num_segments() const { return schedule.size(); }
  FlowProblem<double> segment_problem(std::size_t k) const;
  double segment_end(std::size_t k) const;
  PrimalDualState<double> initial_state() const;
};

/// Parses the sectioned text format documented in README.md.
Scenario parse_scenario(std::istream& in);
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace pdflow

#endif  // PDFLOW_SCENARIO_HPP
