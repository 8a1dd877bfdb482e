#include "pdflow/verify.hpp"

#include "pdflow/analysis.hpp"
#include "pdflow/dynamics.hpp"
#include "pdflow/random_instance.hpp"
#include "pdflow/run.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

namespace pdflow {
namespace {

using Clock = std::chrono::steady_clock;
using Rng = std::mt19937_64;

Rng make_rng(std::uint64_t seed, int suite) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(suite)};
  return Rng(seq);
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(3) << v;
  return ss.str();
}

int sign(double v, double zero_band) {
  if (std::abs(v) <= zero_band) return 0;
  return v > 0 ? 1 : -1;
}

// Thresholds, all fixed here rather than tuned per run.
constexpr double kOracleResidualTol = 1e-8;
constexpr double kOracleRuntimeBudget = 10.0;  // s
constexpr double kConvergedResidualTol = 1e-4;
constexpr double kLimitSlack = 1e-5;
constexpr double kSpreadTol = 1e-4;
constexpr double kOmegaAgreementTol = 1e-3;
constexpr double kBalancedOmegaBand = 1e-6;
constexpr double kCoincideGapTol = 1e-6;
constexpr double kCoincideShrink = 1.8;
constexpr double kKernelDriftTol = 1e-8;
constexpr double kRadialTol = 1e-4;
constexpr double kDroopTol = 1e-8;
constexpr double kShiftTol = 1e-12;
constexpr double kFixtureBalancedTol = 1e-4;
constexpr double kFixtureRuntimeBudget = 60.0;  // s

constexpr double kStep = 1e-3;
constexpr double kMaxHorizon = 500.0;

IntegrationOptions settling_run() {
  IntegrationOptions io;
  io.h = kStep;
  io.t_end = kMaxHorizon;
  io.sample_every = 100;
  io.settle = SettleCriteria{};
  return io;
}

IntegrationOptions fixed_run(double t_end, std::size_t sample_every, double h = kStep) {
  IntegrationOptions io;
  io.h = h;
  io.t_end = t_end;
  io.sample_every = sample_every;
  return io;
}

PrimalDualState<double> random_state(Rng& rng, Index primal, Index n, bool zero_duals) {
  PrimalDualState<double> s;
  s.primal = random_vector<double>(rng, primal);
  s.lambda_lo = zero_duals ? Eigen::VectorXd::Zero(n) : random_duals<double>(rng, n);
  s.lambda_hi = zero_duals ? Eigen::VectorXd::Zero(n) : random_duals<double>(rng, n);
  return s;
}

}  // namespace

VerifyOptions VerifyOptions::with_trials(std::size_t trials, std::uint64_t seed) {
  VerifyOptions o;
  o.seed = seed;
  o.oracle_trials = o.dynamics_trials = o.coincide_trials = o.kernel_trials = o.radial_trials =
      o.droop_trials = o.shift_trials = trials;
  return o;
}

CriterionResult check_oracle_kkt(const VerifyOptions& opt) {
  const auto t0 = Clock::now();
  CriterionResult r{1, "oracle KKT validity", true, {}, 0.0};
  Rng rng = make_rng(opt.seed, 1);
  double worst = 0.0;
  std::size_t failures = 0;
  for (std::size_t k = 0; k < opt.oracle_trials; ++k) {
    const auto p = random_problem<double>(rng);
    const auto sol = solve_oracle(p);
    const auto kkt = kkt_residual_nodal(p, sol.theta, sol.lambda_lo, sol.lambda_hi);
    worst = std::max(worst, kkt.residuals.max());
    if (!(kkt.residuals.max() < kOracleResidualTol)) ++failures;
  }
  r.seconds = seconds_since(t0);
  r.passed = failures == 0 && r.seconds < kOracleRuntimeBudget;
  r.detail = std::to_string(opt.oracle_trials) + " instances, worst residual " + fmt(worst) +
             " (tol " + fmt(kOracleResidualTol) + "), " + std::to_string(failures) + " failures";
  return r;
}

std::vector<CriterionResult> check_dynamics(const VerifyOptions& opt) {
  const auto t0 = Clock::now();
  CriterionResult conv{2, "dynamics converge to KKT points", true, {}, 0.0};
  CriterionResult sync{3, "frequency synchronization and omega_s agreement", true, {}, 0.0};
  CriterionResult laws{4, "trichotomy and active-set laws", true, {}, 0.0};
  Rng rng = make_rng(opt.seed, 2);

  std::size_t conv_fail = 0, sync_fail = 0, law_fail = 0, converged = 0;
  double worst_res = 0.0, worst_spread = 0.0, worst_err = 0.0, worst_pred = 0.0;
  double longest = 0.0;
  for (std::size_t k = 0; k < opt.dynamics_trials; ++k) {
    const auto p = random_problem<double>(rng);
    const Index n = p.num_nodes();
    const auto traj = integrate(System::networked, p, random_state(rng, n, n, true), settling_run());
    longest = std::max(longest, traj.times.back());
    const auto& fin = traj.final_state();
    const auto& power = traj.injections.back();

    const double res = kkt_residual_nodal(p, fin.primal, fin.lambda_lo, fin.lambda_hi).residuals.max();
    const bool within = (power.array() <= p.p_hi().array() + kLimitSlack).all() &&
                        (power.array() >= p.p_lo().array() - kLimitSlack).all();
    worst_res = std::max(worst_res, res);
    const bool ok_conv = res < kConvergedResidualTol && within;
    if (!ok_conv) ++conv_fail;

    const auto metrics = sync_metrics(traj, 0.2);
    const auto sol = solve_oracle(p);
    auto pred = predict(p);
    const double pred_gap = std::abs(pred.omega_s - sol.nu);
    pred.omega_s += opt.oracle_corruption;
    const double err = std::abs(metrics.omega_s_estimate - pred.omega_s);
    worst_spread = std::max(worst_spread, metrics.max_spread);
    worst_err = std::max(worst_err, err);
    worst_pred = std::max(worst_pred, pred_gap);
    if (!(metrics.max_spread < kSpreadTol && err < kOmegaAgreementTol &&
          pred_gap < kPredictAgreementTol)) {
      ++sync_fail;
    }

    if (!ok_conv) continue;
    ++converged;
    const double imbalance = p.p_star().sum() - p.p_load().sum();
    const int expected = sign(imbalance, kBalanceTol);
    bool ok = sign(metrics.omega_s_estimate, kBalancedOmegaBand) == expected &&
              sign(pred.omega_s, 0.0) == expected;
    for (const ActiveSets& sets :
         {active_sets_of_injections(p, power), active_sets_of_injections(p, sol.p_opt)}) {
      ok = ok && sets.mutually_exclusive();
      if (expected > 0) ok = ok && sets.at_upper.empty();
      if (expected < 0) ok = ok && sets.at_lower.empty();
      if (expected == 0) ok = ok && sets.at_upper.empty() && sets.at_lower.empty();
    }
    if (!ok) ++law_fail;
  }
  const double secs = seconds_since(t0);
  const std::string runs = std::to_string(opt.dynamics_trials) + " runs";

  conv.passed = conv_fail == 0;
  conv.detail = runs + ", worst final residual " + fmt(worst_res) + ", longest horizon " +
                fmt(longest) + " s, " + std::to_string(conv_fail) + " failures";
  sync.passed = sync_fail == 0;
  sync.detail = runs + ", worst spread " + fmt(worst_spread) + ", worst |omega_s error| " +
                fmt(worst_err) + ", worst |predict - nu| " + fmt(worst_pred) + ", " +
                std::to_string(sync_fail) + " failures";
  laws.passed = law_fail == 0 && converged > 0;
  laws.detail = std::to_string(converged) + " converged runs, " + std::to_string(law_fail) +
                " violations";
  conv.seconds = sync.seconds = laws.seconds = secs;
  return {conv, sync, laws};
}

CriterionResult check_coinciding_fields(const VerifyOptions& opt) {
  const auto t0 = Clock::now();
  CriterionResult r{5, "coinciding vector fields", true, {}, 0.0};
  Rng rng = make_rng(opt.seed, 5);
  constexpr double horizon = 20.0;
  double worst_gap = 0.0, worst_ratio = std::numeric_limits<double>::infinity();
  std::size_t gap_fail = 0, ratio_fail = 0;

  for (std::size_t k = 0; k < opt.coincide_trials; ++k) {
    const auto p = random_problem<double>(rng);
    const auto s0 = random_state(rng, p.num_nodes(), p.num_nodes(), false);
    double gaps[2] = {0.0, 0.0};
    for (int level = 0; level < 2; ++level) {
      const auto io = fixed_run(horizon, 1, kStep / double(1 << level));
      const auto nodal = integrate(System::networked, p, s0, io);
      const auto edge = integrate(System::edge_primal_dual, p, to_edge_state(p, s0), io);
      for (std::size_t j = 0; j < nodal.size(); ++j) {
        gaps[level] = std::max(
            gaps[level],
            (to_edge_coords(p.transform(), nodal.states[j].primal) - edge.states[j].primal).norm());
      }
    }
    const double ratio = gaps[0] / gaps[1];
    worst_gap = std::max(worst_gap, gaps[0]);
    worst_ratio = std::min(worst_ratio, std::isnan(ratio) ? 0.0 : ratio);
    if (!(gaps[0] < kCoincideGapTol)) ++gap_fail;
    if (!(ratio >= kCoincideShrink)) ++ratio_fail;
  }
  r.seconds = seconds_since(t0);
  r.passed = gap_fail == 0 && ratio_fail == 0;
  r.detail = std::to_string(opt.coincide_trials) + " runs, sup gap " + fmt(worst_gap) + " (tol " +
             fmt(kCoincideGapTol) + ", " + std::to_string(gap_fail) + " failures), min shrink " +
             fmt(worst_ratio) + "x on halving h (need " + fmt(kCoincideShrink) + "x, " +
             std::to_string(ratio_fail) + " failures)";
  return r;
}

CriterionResult check_edge_kernel(const VerifyOptions& opt) {
  const auto t0 = Clock::now();
  CriterionResult r{6, "edge-kernel conservation", true, {}, 0.0};
  Rng rng = make_rng(opt.seed, 6);
  InstanceOptions inst;
  inst.topology = Topology::cyclic;
  double worst = 0.0;
  for (std::size_t k = 0; k < opt.kernel_trials; ++k) {
    const auto p = random_problem<double>(rng, inst);
    const auto split = edge_split(p);
    const auto s0 = random_state(rng, p.num_edges(), p.num_nodes(), false);
    const auto traj = integrate(System::edge_primal_dual, p, s0, fixed_run(50.0, 10));
    const Eigen::VectorXd c0 = split.gamma_zero.transpose() * s0.primal;
    for (const auto& s : traj.states) {
      worst = std::max(worst, (split.gamma_zero.transpose() * s.primal - c0).cwiseAbs().maxCoeff());
    }
  }
  r.seconds = seconds_since(t0);
  r.passed = worst < kKernelDriftTol;
  r.detail = std::to_string(opt.kernel_trials) + " cyclic runs, max kernel drift " + fmt(worst) +
             " (tol " + fmt(kKernelDriftTol) + ")";
  return r;
}

CriterionResult check_radial_uniqueness(const VerifyOptions& opt) {
  const auto t0 = Clock::now();
  CriterionResult r{7, "radial uniqueness", true, {}, 0.0};
  Rng rng = make_rng(opt.seed, 7);
  InstanceOptions inst;
  inst.topology = Topology::tree;
  double worst = 0.0;
  std::size_t unsettled = 0;
  for (std::size_t k = 0; k < opt.radial_trials; ++k) {
    const auto p = random_problem<double>(rng, inst);
    const Index n = p.num_nodes();
    Eigen::VectorXd eta[2];
    for (int run = 0; run < 2; ++run) {
      auto s0 = random_state(rng, n, n, false);
      s0.primal *= 2.0;
      const auto traj = integrate(System::networked, p, s0, settling_run());
      if (!traj.stopped_early) ++unsettled;
      eta[run] = to_edge_coords(p.transform(), traj.final_state().primal);
    }
    worst = std::max(worst, (eta[0] - eta[1]).cwiseAbs().maxCoeff());
  }
  r.seconds = seconds_since(t0);
  r.passed = worst < kRadialTol;
  r.detail = std::to_string(opt.radial_trials) + " tree instances, max |eta_a - eta_b| " +
             fmt(worst) + " (tol " + fmt(kRadialTol) + "), " + std::to_string(unsettled) +
             " runs hit the horizon";
  return r;
}

CriterionResult check_droop_equivalence(const VerifyOptions& opt) {
  const auto t0 = Clock::now();
  CriterionResult r{8, "droop (mu) and lambda forms coincide", true, {}, 0.0};
  Rng rng = make_rng(opt.seed, 8);
  double worst = 0.0;
  for (std::size_t k = 0; k < opt.droop_trials; ++k) {
    const auto p = random_problem<double>(rng);
    const Index n = p.num_nodes();
    const auto mu0 = random_state(rng, n, n, false);
    const auto io = fixed_run(20.0, 1);
    const auto droop = integrate(System::droop, p, mu0, io);
    const auto lam = integrate(System::networked, p, from_droop_duals(p, mu0), io);
    for (std::size_t j = 0; j < droop.size(); ++j) {
      const auto rescaled = to_droop_duals(p, lam.states[j]);
      const auto& d = droop.states[j];
      worst = std::max({worst, (d.primal - rescaled.primal).cwiseAbs().maxCoeff(),
                        (d.lambda_lo - rescaled.lambda_lo).cwiseAbs().maxCoeff(),
                        (d.lambda_hi - rescaled.lambda_hi).cwiseAbs().maxCoeff()});
    }
  }
  r.seconds = seconds_since(t0);
  r.passed = worst < kDroopTol;
  r.detail = std::to_string(opt.droop_trials) + " runs, max deviation " + fmt(worst) + " (tol " +
             fmt(kDroopTol) + ")";
  return r;
}

CriterionResult check_shift_invariance(const VerifyOptions& opt) {
  const auto t0 = Clock::now();
  CriterionResult r{9, "shift invariance", true, {}, 0.0};
  Rng rng = make_rng(opt.seed, 9);
  double worst = 0.0;
  for (std::size_t k = 0; k < opt.shift_trials; ++k) {
    const auto p = random_problem<double>(rng);
    const Index n = p.num_nodes();
    const auto s0 = random_state(rng, n, n, false);
    const double c = uniform(rng, -3.0, 3.0);
    auto shifted = s0;
    shifted.primal.array() += c;
    const auto io = fixed_run(20.0, 10);
    const auto a = integrate(System::networked, p, s0, io);
    const auto b = integrate(System::networked, p, shifted, io);
    for (std::size_t j = 0; j < a.size(); ++j) {
      Eigen::VectorXd theta_gap = b.states[j].primal - a.states[j].primal;
      theta_gap.array() -= c;
      worst = std::max({worst, theta_gap.cwiseAbs().maxCoeff(),
                        (b.states[j].lambda_lo - a.states[j].lambda_lo).cwiseAbs().maxCoeff(),
                        (b.states[j].lambda_hi - a.states[j].lambda_hi).cwiseAbs().maxCoeff(),
                        (b.omega[j] - a.omega[j]).cwiseAbs().maxCoeff()});
    }
    const auto& fa = a.final_state();
    const auto& fb = b.final_state();
    const auto ra = kkt_residual_nodal(p, fa.primal, fa.lambda_lo, fa.lambda_hi).residuals;
    const auto rb = kkt_residual_nodal(p, fb.primal, fb.lambda_lo, fb.lambda_hi).residuals;
    worst = std::max({worst, std::abs(ra.stationarity - rb.stationarity),
                      std::abs(ra.primal_feasibility - rb.primal_feasibility),
                      std::abs(ra.dual_feasibility - rb.dual_feasibility),
                      std::abs(ra.complementary_slackness - rb.complementary_slackness)});
  }
  r.seconds = seconds_since(t0);
  r.passed = worst < kShiftTol;
  r.detail = std::to_string(opt.shift_trials) + " runs, max deviation " + fmt(worst) + " (tol " +
             fmt(kShiftTol) + ")";
  return r;
}

CriterionResult check_fixture(const std::filesystem::path& scenario) {
  const auto t0 = Clock::now();
  CriterionResult r{10, "nine-bus fixture", true, {}, 0.0};
  const Scenario sc = load_scenario(scenario);
  const RunReport rep = run(sc);
  r.seconds = seconds_since(t0);

  const auto order = upper_saturation_order(rep);
  const std::vector<Index> expected{1, 2, 0};
  std::size_t balanced = 0;
  double worst_balanced = 0.0;
  for (const auto& s : rep.segments) {
    if (s.prediction.frequency_case == FrequencyCase::balanced) {
      ++balanced;
      worst_balanced = std::max(worst_balanced, std::abs(s.sync.omega_s_estimate));
    }
  }
  std::string order_text;
  for (Index i : order) order_text += (order_text.empty() ? "" : "->") + ("VSC" + std::to_string(i + 1));
  std::size_t agree = 0;
  for (const auto& s : rep.segments) agree += s.agreement ? 1 : 0;

  r.passed = rep.completed && order == expected && rep.all_agree() && balanced > 0 &&
             worst_balanced < kFixtureBalancedTol && r.seconds < kFixtureRuntimeBudget;
  r.detail = "saturation order " + (order_text.empty() ? std::string("none") : order_text) +
             ", agreement " + std::to_string(agree) + "/" + std::to_string(rep.segments.size()) +
             ", balanced |omega_s| " + fmt(worst_balanced) + " over " + std::to_string(balanced) +
             " segment(s)";
  return r;
}

std::vector<CriterionResult> run_verification(const VerifyOptions& opt) {
  std::vector<CriterionResult> out;
  out.push_back(check_oracle_kkt(opt));
  for (auto& c : check_dynamics(opt)) out.push_back(std::move(c));
  out.push_back(check_coinciding_fields(opt));
  out.push_back(check_edge_kernel(opt));
  out.push_back(check_radial_uniqueness(opt));
  out.push_back(check_droop_equivalence(opt));
  out.push_back(check_shift_invariance(opt));
  if (opt.fixture) out.push_back(check_fixture(*opt.fixture));
  return out;
}

void print_results(std::ostream& os, const std::vector<CriterionResult>& results) {
  for (const auto& r : results) {
    os << (r.passed ? "[PASS] " : "[FAIL] ") << r.id << ' ' << r.name << " (" << fmt(r.seconds)
       << " s): " << r.detail << '\n';
  }
}

}  // namespace pdflow
