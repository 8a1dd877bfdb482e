#include "pdflow/run.hpp"

#include "pdflow/trajectory_io.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

namespace pdflow {
namespace {

std::string join(const std::vector<Index>& v) {
  std::string s = "{";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s + "}";
}

void append(Trajectory<double>& all, Trajectory<double>&& part, bool drop_last) {
  std::size_t count = part.size() - (drop_last && part.size() > 1 ? 1 : 0);
  for (std::size_t k = 0; k < count; ++k) {
    all.times.push_back(part.times[k]);
    all.states.push_back(std::move(part.states[k]));
    all.omega.push_back(std::move(part.omega[k]));
    all.injections.push_back(std::move(part.injections[k]));
  }
}

}  // namespace

bool RunReport::all_agree() const {
  return completed && std::all_of(segments.begin(), segments.end(),
                                  [](const SegmentReport& s) { return s.agreement; });
}

RunReport run(const Scenario& sc, const RunOptions& opt, Trajectory<double>* trajectory) {
  RunReport report;
  Trajectory<double> all;
  all.system = System::networked;

  const double h = opt.h.value_or(sc.sim.h);
  const double t_final = opt.t_end.value_or(sc.sim.t_end);
  PrimalDualState<double> state = sc.initial_state();

  for (std::size_t k = 0; k < sc.num_segments(); ++k) {
    const double t0 = sc.schedule[k].t_start;
    if (t0 >= t_final) break;
    const double t1 = std::min(sc.segment_end(k), t_final);
    const FlowProblem<double> problem = sc.segment_problem(k);

    IntegrationOptions io;
    io.h = h;
    io.t0 = t0;
    io.t_end = t1;
    io.sample_every = sc.sim.sample_every;

    Trajectory<double> part;
    try {
      part = integrate(System::networked, problem, state, io);
    } catch (const IntegrationError& e) {
      report.completed = false;
      report.error = "segment " + std::to_string(k) + ": " + e.what();
      break;
    }
    state = part.final_state();

    SegmentReport seg;
    seg.index = k;
    seg.t_start = t0;
    seg.t_end = t1;
    seg.residuals =
        kkt_residual_nodal(problem, state.primal, state.lambda_lo, state.lambda_hi).residuals;
    seg.final_injections = part.injections.back();
    seg.sync = sync_metrics(part, opt.tail_fraction);
    seg.prediction = predict(problem);
    try {
      seg.active = active_sets_of_injections(problem, seg.final_injections);
    } catch (const ValidationError&) {
      seg.active.tolerance = kDefaultActiveSetTol;
    }
    seg.agreement =
        std::abs(seg.sync.omega_s_estimate - seg.prediction.omega_s) < kAgreementOmegaTol &&
        seg.residuals.max() < kAgreementResidualTol;
    report.segments.push_back(std::move(seg));

    const bool more = k + 1 < sc.num_segments() && sc.schedule[k + 1].t_start < t_final;
    append(all, std::move(part), more);
  }

  if (opt.out_dir) {
    std::filesystem::create_directories(*opt.out_dir);
    const auto wide = *opt.out_dir / "trajectory.csv";
    const auto longf = *opt.out_dir / "trajectory_long.csv";
    const auto rep = *opt.out_dir / "report.txt";
    {
      std::ofstream os(wide);
      write_trajectory_csv(os, all);
    }
    {
      std::ofstream os(longf);
      write_trajectory_long_csv(os, all);
    }
    report.files = {wide, longf, rep};
    std::ofstream os(rep);
    write_run_report(os, report, sc);
  }
  if (trajectory) *trajectory = std::move(all);
  return report;
}

void write_prediction(std::ostream& os, const FrequencyPrediction<double>& pred,
                      double base_power) {
  os << "case: " << to_string(pred.frequency_case) << '\n'
     << "omega_s: " << pred.omega_s << '\n'
     << "active_lower: " << join(pred.active_lower) << '\n'
     << "active_upper: " << join(pred.active_upper) << '\n'
     << "oracle_nu: " << pred.oracle_nu << '\n'
     << "base_power_mva: " << base_power << '\n';
}

void write_run_report(std::ostream& os, const RunReport& report, const Scenario& sc) {
  const auto old = os.precision(kCsvDigits);
  for (const auto& s : report.segments) {
    os << "segment: " << s.index << '\n'
       << "t_start: " << s.t_start << '\n'
       << "t_end: " << s.t_end << '\n'
       << "total_load_pu: " << sc.schedule[s.index].p_load.sum() << '\n'
       << "predicted_case: " << to_string(s.prediction.frequency_case) << '\n'
       << "predicted_omega_s: " << s.prediction.omega_s << '\n'
       << "predicted_active_lower: " << join(s.prediction.active_lower) << '\n'
       << "predicted_active_upper: " << join(s.prediction.active_upper) << '\n'
       << "omega_s_estimate: " << s.sync.omega_s_estimate << '\n'
       << "frequency_spread: " << s.sync.max_spread << '\n'
       << "settled: " << (s.sync.settled ? "true" : "false") << '\n'
       << "kkt_stationarity: " << s.residuals.stationarity << '\n'
       << "kkt_primal: " << s.residuals.primal_feasibility << '\n'
       << "kkt_dual: " << s.residuals.dual_feasibility << '\n'
       << "kkt_slackness: " << s.residuals.complementary_slackness << '\n'
       << "active_lower: " << join(s.active.at_lower) << '\n'
       << "active_upper: " << join(s.active.at_upper) << '\n';
    os << "injections_mw:";
    for (Index i = 0; i < s.final_injections.size(); ++i) {
      os << ' ' << s.final_injections(i) * sc.base_power;
    }
    os << '\n' << "agreement: " << (s.agreement ? "true" : "false") << "\n\n";
  }
  os << "completed: " << (report.completed ? "true" : "false") << '\n';
  if (!report.error.empty()) os << "error: " << report.error << '\n';
  os.precision(old);
}

void append_prediction_csv(const std::filesystem::path& path, std::size_t segment,
                           const FrequencyPrediction<double>& pred) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream os(path, std::ios::app);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  os.precision(kCsvDigits);
  if (fresh) os << "segment,case,omega_s,active_lower,active_upper\n";
  auto list = [](const std::vector<Index>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
    return s;
  };
  os << segment << ',' << to_string(pred.frequency_case) << ',' << pred.omega_s << ','
     << list(pred.active_lower) << ',' << list(pred.active_upper) << '\n';
}

std::vector<Index> upper_saturation_order(const RunReport& report) {
  std::vector<Index> order;
  for (const auto& s : report.segments) {
    for (Index i : s.active.at_upper) {
      if (std::find(order.begin(), order.end(), i) == order.end()) order.push_back(i);
    }
  }
  return order;
}

}  // namespace pdflow
