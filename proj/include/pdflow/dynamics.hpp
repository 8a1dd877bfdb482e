#ifndef PDFLOW_DYNAMICS_HPP
#define PDFLOW_DYNAMICS_HPP

#include "pdflow/problem.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

namespace pdflow {

/// Which vector field to evaluate/integrate.
enum class System {
  networked,         // local angle dynamics, duals lambda scaled by sqrt(k_i)
  droop,             // same dynamics in the controller variables mu = sqrt(k_i) lambda
  edge_primal_dual,  // primal-dual gradient flow in edge coordinates eta
  node_primal_dual,  // non-local primal-dual flow in nodal coordinates
};

inline bool is_nodal(System s) { return s != System::edge_primal_dual; }

/// Primal state (theta for nodal systems, eta for the edge system) plus the
/// nonnegative multipliers of the lower and upper injection limits. For
/// System::droop the duals hold mu instead of lambda.
template <typename Scalar>
struct PrimalDualState {
  Vector<Scalar> primal;
  Vector<Scalar> lambda_lo;
  Vector<Scalar> lambda_hi;
};

/// Raw vector field: the dual rates are the gradients before tangent-cone
/// projection. `power` is the injection P at which the field was evaluated.
template <typename Scalar>
struct Rates {
  Vector<Scalar> primal;
  Vector<Scalar> dual_lo;
  Vector<Scalar> dual_hi;
  Vector<Scalar> power;
};

/// Projection of v onto the tangent cone of R_{>=0} at x.
template <typename Scalar>
Scalar tangent_project(Scalar x, Scalar v) {
  if (x < Scalar(0)) {
    throw std::domain_error("tangent_project: point outside the nonnegative orthant");
  }
  return x > Scalar(0) ? v : std::max(v, Scalar(0));
}

template <typename Scalar>
Vector<Scalar> tangent_project(const Vector<Scalar>& x, const Vector<Scalar>& v) {
  Vector<Scalar> out(v.size());
  for (Index i = 0; i < v.size(); ++i) out(i) = tangent_project(x(i), v(i));
  return out;
}

namespace detail {

template <typename Scalar>
void check_state(const FlowProblem<Scalar>& p, const PrimalDualState<Scalar>& s,
                 Index primal_size) {
  require_size(s.primal, primal_size, "state.primal");
  require_size(s.lambda_lo, p.num_nodes(), "state.lambda_lo");
  require_size(s.lambda_hi, p.num_nodes(), "state.lambda_hi");
}

// Local droop law with proportional limiting; the integral terms are added by
// the caller in whichever dual scaling it uses.
template <typename Scalar>
Vector<Scalar> droop_with_limits(const FlowProblem<Scalar>& p,
                                 const Vector<Scalar>& power) {
  const auto over = (power - p.p_hi()).cwiseMax(Scalar(0));
  const auto under = (p.p_lo() - power).cwiseMax(Scalar(0));
  return p.m().cwiseProduct(p.p_star() - power) - p.k_p().cwiseProduct(over) +
         p.k_p().cwiseProduct(under);
}

template <typename Scalar>
Rates<Scalar> networked_at_power(const FlowProblem<Scalar>& p,
                                 const PrimalDualState<Scalar>& s,
                                 Vector<Scalar> power) {
  const auto& ki = p.sqrt_k_i();
  Rates<Scalar> r;
  r.primal = droop_with_limits(p, power) -
             ki.cwiseProduct(s.lambda_hi - s.lambda_lo);
  r.dual_lo = ki.cwiseProduct(p.p_lo() - power);
  r.dual_hi = ki.cwiseProduct(power - p.p_hi());
  r.power = std::move(power);
  return r;
}

}  // namespace detail

/// Networked dynamics at each node i:
///   theta_i'  = m_i (P*_i - P_i) - k_P,i [P_i - P_hi,i]+ + k_P,i [P_lo,i - P_i]+
///               - sqrt(k_I,i) (lambda_hi,i - lambda_lo,i)
///   lambda_lo' = sqrt(k_I,i) (P_lo,i - P_i),  lambda_hi' = sqrt(k_I,i) (P_i - P_hi,i)
/// Node i only needs its own P_i and controller states.
template <typename Scalar>
Rates<Scalar> networked_rates(const FlowProblem<Scalar>& p,
                              const PrimalDualState<Scalar>& s) {
  detail::check_state(p, s, p.num_nodes());
  return detail::networked_at_power(p, s, injections(p, s.primal));
}

/// Droop-control form: duals are the integrator states mu and enter unweighted,
/// while the limit violations are integrated with gain k_I (not its root).
template <typename Scalar>
Rates<Scalar> droop_rates(const FlowProblem<Scalar>& p,
                          const PrimalDualState<Scalar>& s) {
  detail::check_state(p, s, p.num_nodes());
  Rates<Scalar> r;
  r.power = injections(p, s.primal);
  r.primal = detail::droop_with_limits(p, r.power) - (s.lambda_hi - s.lambda_lo);
  r.dual_lo = p.k_i().cwiseProduct(p.p_lo() - r.power);
  r.dual_hi = p.k_i().cwiseProduct(r.power - p.p_hi());
  return r;
}

/// Primal-dual gradient flow of the edge-coordinate problem:
///   eta' = V B^T ( M(P* - P) + K_P[g_lo]+ - K_P[g_hi]+ - K_I(lambda_hi - lambda_lo) )
///   lambda' = K_I g(B V eta),  with P = B V eta + P_L.
template <typename Scalar>
Rates<Scalar> edge_pd_rates(const FlowProblem<Scalar>& p,
                            const PrimalDualState<Scalar>& s) {
  detail::check_state(p, s, p.num_edges());
  const auto& t = p.transform();
  Vector<Scalar> power = from_edge_coords(t, s.primal) + p.p_load();
  Rates<Scalar> r = detail::networked_at_power(p, s, std::move(power));
  r.primal = t.V() * (t.incidence.transpose() * r.primal);
  return r;
}

/// Primal-dual flow of the augmented Lagrangian in nodal coordinates.
/// Every primal term is premultiplied by L, so evaluating it needs the
/// neighbours' duals.
template <typename Scalar>
Rates<Scalar> node_pd_rates(const FlowProblem<Scalar>& p,
                            const PrimalDualState<Scalar>& s,
                            Scalar rho = Scalar(1)) {
  detail::check_state(p, s, p.num_nodes());
  const auto& lap = p.transform().laplacian;
  Rates<Scalar> r;
  r.power = injections(p, s.primal);
  const Vector<Scalar> over = (r.power - p.p_hi()).cwiseMax(Scalar(0));
  const Vector<Scalar> under = (p.p_lo() - r.power).cwiseMax(Scalar(0));
  r.primal = lap * (-p.m().cwiseProduct(r.power - p.p_star()) - rho * over -
                    s.lambda_hi + rho * under + s.lambda_lo);
  r.dual_lo = p.p_lo() - r.power;
  r.dual_hi = r.power - p.p_hi();
  return r;
}

template <typename Scalar>
Rates<Scalar> rates(System sys, const FlowProblem<Scalar>& p,
                    const PrimalDualState<Scalar>& s, Scalar rho = Scalar(1)) {
  switch (sys) {
    case System::networked: return networked_rates(p, s);
    case System::droop: return droop_rates(p, s);
    case System::edge_primal_dual: return edge_pd_rates(p, s);
    case System::node_primal_dual: return node_pd_rates(p, s, rho);
  }
  throw std::invalid_argument("unknown system");
}

/// Projected vector field (the right-hand side of the projected dynamics).
template <typename Scalar>
PrimalDualState<Scalar> rhs(System sys, const FlowProblem<Scalar>& p,
                            const PrimalDualState<Scalar>& s,
                            Scalar rho = Scalar(1)) {
  Rates<Scalar> r = rates(sys, p, s, rho);
  return {std::move(r.primal), tangent_project(s.lambda_lo, r.dual_lo),
          tangent_project(s.lambda_hi, r.dual_hi)};
}

template <typename Scalar>
PrimalDualState<Scalar> networked_rhs(const FlowProblem<Scalar>& p,
                                      const PrimalDualState<Scalar>& s) {
  return rhs(System::networked, p, s);
}
template <typename Scalar>
PrimalDualState<Scalar> droop_rhs(const FlowProblem<Scalar>& p,
                                  const PrimalDualState<Scalar>& s) {
  return rhs(System::droop, p, s);
}
template <typename Scalar>
PrimalDualState<Scalar> edge_pd_rhs(const FlowProblem<Scalar>& p,
                                    const PrimalDualState<Scalar>& s) {
  return rhs(System::edge_primal_dual, p, s);
}
template <typename Scalar>
PrimalDualState<Scalar> node_pd_rhs(const FlowProblem<Scalar>& p,
                                    const PrimalDualState<Scalar>& s,
                                    Scalar rho = Scalar(1)) {
  return rhs(System::node_primal_dual, p, s, rho);
}

/// lambda-form state -> mu-form state (mu = sqrt(k_i) lambda) and back.
template <typename Scalar>
PrimalDualState<Scalar> to_droop_duals(const FlowProblem<Scalar>& p,
                                       PrimalDualState<Scalar> s) {
  s.lambda_lo = s.lambda_lo.cwiseProduct(p.sqrt_k_i());
  s.lambda_hi = s.lambda_hi.cwiseProduct(p.sqrt_k_i());
  return s;
}
template <typename Scalar>
PrimalDualState<Scalar> from_droop_duals(const FlowProblem<Scalar>& p,
                                         PrimalDualState<Scalar> s) {
  s.lambda_lo = s.lambda_lo.cwiseQuotient(p.sqrt_k_i());
  s.lambda_hi = s.lambda_hi.cwiseQuotient(p.sqrt_k_i());
  return s;
}

/// (theta, lambda) -> (V B^T theta, lambda)
template <typename Scalar>
PrimalDualState<Scalar> to_edge_state(const FlowProblem<Scalar>& p,
                                      const PrimalDualState<Scalar>& s) {
  return {to_edge_coords(p.transform(), s.primal), s.lambda_lo, s.lambda_hi};
}

// ---------------------------------------------------------------------------
// Integration

template <typename Scalar>
struct Trajectory {
  System system = System::networked;
  std::vector<double> times;
  std::vector<PrimalDualState<Scalar>> states;
  std::vector<Vector<Scalar>> omega;       // primal rate at each sample
  std::vector<Vector<Scalar>> injections;  // P at each sample
  bool stopped_early = false;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
  const PrimalDualState<Scalar>& final_state() const { return states.back(); }
};

/// Early-stop rule: the frequency spread (nodal systems) or primal rate norm
/// (edge system) and every projected dual rate stay below `rate_tol` for at
/// least the last `tail_fraction` of the elapsed horizon.
struct SettleCriteria {
  double rate_tol = 1e-8;
  double tail_fraction = 0.2;
  std::size_t min_samples = 10;
};

struct IntegrationOptions {
  double h = 1e-3;
  double t0 = 0.0;
  double t_end = 10.0;
  std::size_t sample_every = 1;
  double rho = 1.0;  // node_primal_dual only
  double divergence_bound = 1e9;
  std::optional<SettleCriteria> settle;
};

namespace detail {

template <typename Scalar>
Scalar rate_spread(System sys, const Vector<Scalar>& primal_rate) {
  if (primal_rate.size() == 0) return Scalar(0);
  if (sys == System::edge_primal_dual) return primal_rate.norm();
  return primal_rate.maxCoeff() - primal_rate.minCoeff();
}

}  // namespace detail

/// Projected forward Euler:
///   primal <- primal + h * primal_rate
///   dual   <- max(0, dual + h * dual_rate)
/// which keeps the duals in the nonnegative orthant at every step.
template <typename Scalar>
Trajectory<Scalar> integrate(System sys, const FlowProblem<Scalar>& p,
                             PrimalDualState<Scalar> s,
                             const IntegrationOptions& opt) {
  if (!(opt.h > 0)) throw ValidationError("integrate: step size must be positive");
  if (opt.sample_every == 0) throw ValidationError("integrate: sample_every must be >= 1");
  if (!(opt.t_end >= opt.t0)) throw ValidationError("integrate: t_end < t0");
  detail::check_state(p, s, is_nodal(sys) ? p.num_nodes() : p.num_edges());
  if ((s.lambda_lo.array() < Scalar(0)).any() ||
      (s.lambda_hi.array() < Scalar(0)).any()) {
    throw ValidationError("integrate: initial duals must be nonnegative");
  }

  const auto steps =
      static_cast<std::size_t>(std::llround((opt.t_end - opt.t0) / opt.h));
  const Scalar h = Scalar(opt.h);
  const Scalar rho = Scalar(opt.rho);

  Trajectory<Scalar> traj;
  traj.system = sys;
  bool quiet_run = false;
  double settled_since = 0.0;  // start of the current quiet stretch

  auto record = [&](double t, const Rates<Scalar>& r) {
    traj.times.push_back(t);
    traj.states.push_back(s);
    traj.omega.push_back(r.primal);
    traj.injections.push_back(r.power);
  };

  for (std::size_t k = 0;; ++k) {
    const double t = opt.t0 + double(k) * opt.h;
    Rates<Scalar> r = rates(sys, p, s, rho);
    const bool last = (k == steps);
    if (k % opt.sample_every == 0 || last) {
      record(t, r);
      if (opt.settle) {
        const Scalar dual_rate = std::max(
            tangent_project(s.lambda_lo, r.dual_lo).cwiseAbs().maxCoeff(),
            tangent_project(s.lambda_hi, r.dual_hi).cwiseAbs().maxCoeff());
        const bool quiet = detail::rate_spread(sys, r.primal) < opt.settle->rate_tol &&
                           dual_rate < opt.settle->rate_tol;
        if (!quiet) {
          quiet_run = false;
        } else if (!quiet_run) {
          quiet_run = true;
          settled_since = t;
        }
        const double elapsed = t - opt.t0;
        if (quiet_run && !last && traj.size() >= opt.settle->min_samples &&
            t - settled_since >= opt.settle->tail_fraction * elapsed) {
          traj.stopped_early = true;
          break;
        }
      }
    }
    if (last) break;

    s.primal += h * r.primal;
    s.lambda_lo = (s.lambda_lo + h * r.dual_lo).cwiseMax(Scalar(0));
    s.lambda_hi = (s.lambda_hi + h * r.dual_hi).cwiseMax(Scalar(0));

    const Scalar size = std::sqrt(s.primal.squaredNorm() + s.lambda_lo.squaredNorm() +
                                  s.lambda_hi.squaredNorm());
    if (!std::isfinite(double(size))) {
      throw IntegrationError("integrate: state became nonfinite", k + 1);
    }
    if (size > Scalar(opt.divergence_bound)) {
      throw IntegrationError("integrate: state norm exceeded divergence bound", k + 1);
    }
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Synchronization metrics

struct SyncTolerances {
  double max_spread = 1e-4;  // pu
  double max_drift = 1e-6;   // pu per second
};

struct SyncMetrics {
  double omega_s_estimate = 0.0;
  double max_spread = 0.0;
  double mean_drift = 0.0;  // |change of mean frequency| per second over the tail
  bool settled = false;
};

/// Statistics of the nodal frequencies over the last `tail_fraction` of the
/// samples.
template <typename Scalar>
SyncMetrics sync_metrics(const Trajectory<Scalar>& traj, double tail_fraction = 0.2,
                         const SyncTolerances& tol = {}) {
  if (traj.empty()) throw ValidationError("sync_metrics: empty trajectory");
  const std::size_t n = traj.size();
  auto tail = static_cast<std::size_t>(std::ceil(tail_fraction * double(n)));
  tail = std::clamp<std::size_t>(tail, 1, n);
  const std::size_t first = n - tail;

  SyncMetrics out;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t k = first; k < n; ++k) {
    const auto& w = traj.omega[k];
    out.max_spread = std::max(out.max_spread, double(w.maxCoeff() - w.minCoeff()));
    sum += double(w.sum());
    count += static_cast<std::size_t>(w.size());
  }
  out.omega_s_estimate = sum / double(count);
  const double dt = traj.times[n - 1] - traj.times[first];
  if (dt > 0) {
    out.mean_drift = std::abs(double(traj.omega[n - 1].mean() - traj.omega[first].mean())) / dt;
  }
  out.settled = out.max_spread < tol.max_spread && out.mean_drift < tol.max_drift;
  return out;
}

}  // namespace pdflow

#endif  // PDFLOW_DYNAMICS_HPP
