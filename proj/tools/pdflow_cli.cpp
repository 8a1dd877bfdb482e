#include "pdflow/analysis.hpp"
#include "pdflow/run.hpp"
#include "pdflow/scenario.hpp"
#include "pdflow/verify.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace {

using namespace pdflow;

std::size_t checked_segment(const Scenario& sc, std::size_t k) {
  if (k >= sc.num_segments()) {
    throw std::out_of_range("segment " + std::to_string(k) + " out of range (scenario has " +
                            std::to_string(sc.num_segments()) + ")");
  }
  return k;
}

int cmd_simulate(const std::string& path, const std::string& out, std::optional<double> h,
                 std::optional<double> t_end) {
  const Scenario sc = load_scenario(path);
  RunOptions opt;
  if (!out.empty()) opt.out_dir = out;
  opt.h = h;
  opt.t_end = t_end;
  const RunReport rep = run(sc, opt);
  write_run_report(std::cout, rep, sc);
  for (const auto& f : rep.files) std::cout << "wrote: " << f.string() << '\n';
  return rep.all_agree() ? 0 : 1;
}

int cmd_predict(const std::string& path, std::optional<std::size_t> segment,
                const std::string& csv) {
  const Scenario sc = load_scenario(path);
  std::vector<std::size_t> which;
  if (segment) {
    which.push_back(checked_segment(sc, *segment));
  } else {
    for (std::size_t k = 0; k < sc.num_segments(); ++k) which.push_back(k);
  }
  std::cout.precision(12);
  for (std::size_t k : which) {
    const auto pred = predict(sc.segment_problem(k));
    std::cout << "segment: " << k << '\n';
    write_prediction(std::cout, pred, sc.base_power);
    std::cout << '\n';
    if (!csv.empty()) append_prediction_csv(csv, k, pred);
  }
  return 0;
}

int cmd_oracle(const std::string& path, std::size_t segment) {
  const Scenario sc = load_scenario(path);
  const auto p = sc.segment_problem(checked_segment(sc, segment));
  const auto sol = solve_oracle(p);
  const auto kkt = kkt_residual_nodal(p, sol.theta, sol.lambda_lo, sol.lambda_hi);
  auto vec = [](const Eigen::VectorXd& v) {
    std::ostringstream ss;
    ss.precision(12);
    for (Index i = 0; i < v.size(); ++i) ss << (i ? " " : "") << v(i);
    return ss.str();
  };
  std::cout.precision(12);
  std::cout << "segment: " << segment << '\n'
            << "nu: " << sol.nu << '\n'
            << "p_opt: " << vec(sol.p_opt) << '\n'
            << "p_opt_mw: " << vec(sol.p_opt * sc.base_power) << '\n'
            << "theta: " << vec(sol.theta) << '\n'
            << "lambda_lo: " << vec(sol.lambda_lo) << '\n'
            << "lambda_hi: " << vec(sol.lambda_hi) << '\n'
            << "kkt_max_residual: " << kkt.residuals.max() << '\n'
            << "bisection_iterations: " << sol.iterations << '\n';
  return kkt.accepted() ? 0 : 1;
}

int cmd_verify(std::size_t trials, std::uint64_t seed, const std::string& fixture) {
  VerifyOptions opt = VerifyOptions::with_trials(trials, seed);
  if (!fixture.empty()) opt.fixture = fixture;
  const auto results = run_verification(opt);
  print_results(std::cout, results);
  for (const auto& r : results) {
    if (!r.passed) return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained network flow: oracle, dynamics and droop-control checks"};
  app.require_subcommand(1);

  std::string scenario, out_dir, csv, fixture;
  std::optional<double> h, t_end;
  std::optional<std::size_t> segment;
  std::size_t oracle_segment = 0;
  std::size_t trials = 100;
  std::uint64_t seed = 42;

  auto* sim = app.add_subcommand("simulate", "Integrate a scenario segment by segment");
  sim->set_help_flag("--help", "Print this help message and exit");
  sim->add_option("scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", out_dir, "Directory for trajectory CSVs and report");
  sim->add_option("--h", h, "Step size override (s)");
  sim->add_option("--t-end", t_end, "Horizon override (s)");

  auto* pred = app.add_subcommand("predict", "Closed-form synchronous frequency per segment");
  pred->add_option("scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  pred->add_option("--segment", segment, "Segment index (0-based); default all");
  pred->add_option("--csv", csv, "Append predictions to this CSV file");

  auto* orc = app.add_subcommand("oracle", "Solve one segment with the bisection oracle");
  orc->add_option("scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  orc->add_option("--segment", oracle_segment, "Segment index (0-based)");

  auto* ver = app.add_subcommand("verify", "Run the randomized property suites");
  ver->add_option("--trials", trials, "Instances per property")->check(CLI::PositiveNumber);
  ver->add_option("--seed", seed, "Generator seed");
  fixture = std::string(PDFLOW_DATA_DIR) + "/nine_bus.scenario";
  ver->add_option("--fixture", fixture, "Scenario used for the fixture check ('' to skip)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) return cmd_simulate(scenario, out_dir, h, t_end);
    if (*pred) return cmd_predict(scenario, segment, csv);
    if (*orc) return cmd_oracle(scenario, oracle_segment);
    if (*ver) {
      if (!fixture.empty() && !std::filesystem::exists(fixture)) fixture.clear();
      return cmd_verify(trials, seed, fixture);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
