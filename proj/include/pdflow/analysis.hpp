#ifndef PDFLOW_ANALYSIS_HPP
#define PDFLOW_ANALYSIS_HPP

#include "pdflow/oracle.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace pdflow {

// ---------------------------------------------------------------------------
// Synchronous frequency

enum class FrequencyCase { below_dispatch, balanced, above_dispatch };

inline const char* to_string(FrequencyCase c) {
  switch (c) {
    case FrequencyCase::below_dispatch: return "below_dispatch";
    case FrequencyCase::balanced: return "balanced";
    case FrequencyCase::above_dispatch: return "above_dispatch";
  }
  return "?";
}

template <typename Scalar>
struct FrequencyPrediction {
  FrequencyCase frequency_case = FrequencyCase::balanced;
  Scalar omega_s = Scalar(0);
  std::vector<Index> active_lower;
  std::vector<Index> active_upper;
  Scalar oracle_nu = Scalar(0);  // bisection value the formula was checked against
};

// Totals are compared with this absolute slack before a case is called balanced.
inline constexpr double kBalanceTol = 1e-12;
// Closed form and bisection must agree this closely.
inline constexpr double kPredictAgreementTol = 1e-9;

/// Closed-form synchronous frequency
///
///   omega_s = (sum_{free} P*_i + sum_{upper} P_hi,i + sum_{lower} P_lo,i - sum P_L,i)
///             / sum_{free} 1/m_i
///
/// with the active sets read off the oracle's clipped components. The result
/// is cross-checked against the oracle multiplier nu.
template <typename Scalar>
FrequencyPrediction<Scalar> predict(const FlowProblem<Scalar>& p,
                                    const OracleOptions& opt = {}) {
  const auto report = validate(p);
  if (!report.ok()) throw ValidationError("predict: " + report.summary());

  const OracleSolution<Scalar> sol = solve_oracle(p, opt);
  FrequencyPrediction<Scalar> out;
  out.active_lower = sol.clipped_lower;
  out.active_upper = sol.clipped_upper;
  out.oracle_nu = sol.nu;

  std::vector<bool> active(static_cast<std::size_t>(p.num_nodes()), false);
  Scalar numerator = -p.p_load().sum();
  for (Index i : out.active_upper) {
    active[static_cast<std::size_t>(i)] = true;
    numerator += p.p_hi()(i);
  }
  for (Index i : out.active_lower) {
    active[static_cast<std::size_t>(i)] = true;
    numerator += p.p_lo()(i);
  }
  Scalar denominator = Scalar(0);
  for (Index i = 0; i < p.num_nodes(); ++i) {
    if (active[static_cast<std::size_t>(i)]) continue;
    numerator += p.p_star()(i);
    denominator += Scalar(1) / p.m()(i);
  }
  if (!(denominator > Scalar(0))) {
    throw std::logic_error("predict: every node is at a limit (assumption 1 cannot hold)");
  }
  out.omega_s = numerator / denominator;

  const Scalar imbalance = p.p_star().sum() - p.p_load().sum();
  if (std::abs(imbalance) <= Scalar(kBalanceTol)) {
    out.frequency_case = FrequencyCase::balanced;
  } else if (imbalance > 0) {
    out.frequency_case = FrequencyCase::below_dispatch;
  } else {
    out.frequency_case = FrequencyCase::above_dispatch;
  }

  if (std::abs(out.omega_s - sol.nu) > Scalar(kPredictAgreementTol)) {
    throw std::logic_error("predict: closed form " + std::to_string(double(out.omega_s)) +
                           " disagrees with oracle nu " + std::to_string(double(sol.nu)));
  }
  if (out.frequency_case == FrequencyCase::balanced) out.omega_s = Scalar(0);
  return out;
}

// ---------------------------------------------------------------------------
// Edge-coordinate eigensplit

/// Eigendecomposition of the edge Hessian V B^T M B V into its range
/// (gamma_plus, n-1 columns) and kernel (gamma_zero, e-n+1 columns).
template <typename Scalar>
struct EdgeSplit {
  Matrix<Scalar> gamma_plus;
  Matrix<Scalar> gamma_zero;
  Vector<Scalar> eigenvalues;  // ascending
};

template <typename Scalar>
Matrix<Scalar> edge_hessian(const FlowProblem<Scalar>& p) {
  const auto& t = p.transform();
  const Matrix<Scalar> bv = t.incidence * t.V();
  return bv.transpose() * p.m().asDiagonal() * bv;
}

template <typename Scalar>
EdgeSplit<Scalar> edge_split(const FlowProblem<Scalar>& p) {
  const Matrix<Scalar> hess = edge_hessian(p);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(hess);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("edge_split: eigendecomposition failed");
  }
  const Vector<Scalar>& ev = es.eigenvalues();
  const Scalar cutoff = Scalar(kRankRelTol) * ev.cwiseAbs().maxCoeff();
  Index zeros = 0;
  while (zeros < ev.size() && std::abs(ev(zeros)) <= cutoff) ++zeros;

  const Index expected = p.num_edges() - (p.num_nodes() - 1);
  if (zeros != expected) {
    throw std::logic_error("edge_split: found " + std::to_string(zeros) +
                           " zero eigenvalues, expected " + std::to_string(expected));
  }
  EdgeSplit<Scalar> out;
  out.eigenvalues = ev;
  out.gamma_zero = es.eigenvectors().leftCols(zeros);
  out.gamma_plus = es.eigenvectors().rightCols(ev.size() - zeros);
  return out;
}

/// H = gamma_plus^T V B^T M B V gamma_plus
template <typename Scalar>
Matrix<Scalar> reduced_hessian(const FlowProblem<Scalar>& p, const EdgeSplit<Scalar>& s) {
  return s.gamma_plus.transpose() * edge_hessian(p) * s.gamma_plus;
}

/// c = gamma_plus^T V B^T M (P* - P_L)
template <typename Scalar>
Vector<Scalar> reduced_linear_term(const FlowProblem<Scalar>& p, const EdgeSplit<Scalar>& s) {
  const auto& t = p.transform();
  return s.gamma_plus.transpose() *
         (t.V() * (t.incidence.transpose() *
                   p.m().cwiseProduct(p.p_star() - p.p_load())));
}

// ---------------------------------------------------------------------------
// Cross-coordinate KKT check

template <typename Scalar>
struct CrossCheckReport {
  KktPoint<Scalar> nodal;
  KktPoint<Scalar> edge;
  bool nodal_accepts = false;
  bool edge_accepts = false;
  // Edge stationarity must lie within [sigma_min, sigma_max] of B times the
  // nodal stationarity; outside that band the two evaluations are inconsistent.
  bool numerically_consistent = true;

  bool agree() const { return nodal_accepts == edge_accepts; }
};

template <typename Scalar>
CrossCheckReport<Scalar> verify_cross_coordinates(const FlowProblem<Scalar>& p,
                                                  const Vector<Scalar>& theta,
                                                  const Vector<Scalar>& lambda_lo,
                                                  const Vector<Scalar>& lambda_hi,
                                                  Scalar tol = Scalar(kDefaultKktTol)) {
  CrossCheckReport<Scalar> r;
  r.nodal = kkt_residual_nodal(p, theta, lambda_lo, lambda_hi);
  r.edge = kkt_residual_edge(p, to_edge_coords(p.transform(), theta), lambda_lo, lambda_hi);
  r.nodal_accepts = r.nodal.accepted(tol);
  r.edge_accepts = r.edge.accepted(tol);

  // For x orthogonal to 1: sigma_min+ |x| <= |B^T x| <= sigma_max |x|.
  Eigen::JacobiSVD<Matrix<Scalar>> svd(p.transform().incidence);
  const Vector<Scalar>& sv = svd.singularValues();
  const Scalar sigma_max = sv(0);
  const Scalar sigma_min = sv(p.num_nodes() - 2);
  const Scalar ns = r.nodal.residuals.stationarity;
  const Scalar es = r.edge.residuals.stationarity;
  const Scalar slack = Scalar(1e-12) * (Scalar(1) + ns + es);
  r.numerically_consistent =
      es <= sigma_max * ns + slack && es + slack >= sigma_min * ns;
  return r;
}

}  // namespace pdflow

#endif  // PDFLOW_ANALYSIS_HPP
