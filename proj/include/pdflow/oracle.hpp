#ifndef PDFLOW_ORACLE_HPP
#define PDFLOW_ORACLE_HPP

#include "pdflow/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace pdflow {

// Reference solver for the constrained flow problem.
//
// Feasible injections are exactly {P : P_lo <= P <= P_hi, 1^T P = 1^T P_L},
// so the problem is a separable box QP with a single equality constraint.
// Stationarity gives P_i = clip(P*_i - nu / m_i, P_lo_i, P_hi_i) and nu is the
// root of the nonincreasing map nu -> sum_i P_i(nu) - sum_i P_L_i, found by
// bisection. Nothing here touches the dynamics; the solver only needs the
// graph to recover a representative theta.

template <typename Scalar>
struct OracleSolution {
  Vector<Scalar> p_opt;
  Scalar nu = Scalar(0);
  Vector<Scalar> theta;  // zero-mean, L theta = p_opt - P_L
  Vector<Scalar> lambda_lo;
  Vector<Scalar> lambda_hi;
  std::vector<Index> clipped_lower;
  std::vector<Index> clipped_upper;
  int iterations = 0;

  Scalar predicted_omega_s() const { return nu; }
};

struct OracleOptions {
  double sum_tol = 1e-12;
  int max_iter = 200;
};

/// Unique zero-mean theta with L theta = p_opt - p_load.
///
/// Solves (L + 11^T / n) theta = rhs, which is positive definite for a
/// connected graph and forces 1^T theta = 0 whenever rhs is orthogonal to 1.
template <typename Scalar>
Vector<Scalar> recover_theta(const EdgeTransform<Scalar>& t,
                             const Vector<Scalar>& p_opt,
                             const Vector<Scalar>& p_load,
                             Scalar orth_tol = Scalar(1e-9)) {
  const Index n = t.num_nodes();
  detail::require_size(p_opt, n, "recover_theta(p_opt)");
  detail::require_size(p_load, n, "recover_theta(p_load)");
  const Vector<Scalar> rhs = p_opt - p_load;
  const Scalar scale = std::max<Scalar>(Scalar(1), rhs.cwiseAbs().maxCoeff());
  if (std::abs(rhs.sum()) > orth_tol * scale) {
    throw ValidationError(
        "recover_theta: p_opt - p_load is not orthogonal to the ones vector");
  }
  Matrix<Scalar> a = t.laplacian;
  a.array() += Scalar(1) / Scalar(n);
  Eigen::LLT<Matrix<Scalar>> llt(a);
  if (llt.info() != Eigen::Success) {
    throw StructuralError("recover_theta: Laplacian rank deficient");
  }
  return llt.solve(project_off_consensus(rhs));
}

namespace detail {

template <typename Scalar>
Scalar clipped_sum(const FlowProblem<Scalar>& p, Scalar nu) {
  Scalar s = Scalar(0);
  for (Index i = 0; i < p.num_nodes(); ++i) {
    s += std::clamp(p.p_star()(i) - nu / p.m()(i), p.p_lo()(i), p.p_hi()(i));
  }
  return s;
}

}  // namespace detail

template <typename Scalar>
OracleSolution<Scalar> solve_oracle(const FlowProblem<Scalar>& p,
                                    const OracleOptions& opt = {}) {
  const Index n = p.num_nodes();
  const auto& m = p.m();
  const Scalar target = p.p_load().sum();

  Scalar lo = std::numeric_limits<Scalar>::infinity();
  Scalar hi = -std::numeric_limits<Scalar>::infinity();
  for (Index i = 0; i < n; ++i) {
    lo = std::min(lo, m(i) * (p.p_star()(i) - p.p_hi()(i)));
    hi = std::max(hi, m(i) * (p.p_star()(i) - p.p_lo()(i)));
  }
  lo -= Scalar(1);
  hi += Scalar(1);
  // At lo every component sits at P_hi, at hi every component at P_lo.
  if (!(detail::clipped_sum(p, lo) > target &&
        detail::clipped_sum(p, hi) < target)) {
    throw ValidationError(
        "oracle: bisection bracket does not contain the root "
        "(assumption 1 violated)");
  }

  OracleSolution<Scalar> sol;
  Scalar nu = Scalar(0.5) * (lo + hi);
  for (sol.iterations = 0; sol.iterations < opt.max_iter; ++sol.iterations) {
    nu = Scalar(0.5) * (lo + hi);
    if (!(lo < nu && nu < hi)) break;  // bracket exhausted at machine precision
    const Scalar excess = detail::clipped_sum(p, nu) - target;
    if (std::abs(excess) < Scalar(opt.sum_tol)) break;
    if (excess > 0) {
      lo = nu;
    } else {
      hi = nu;
    }
  }
  sol.nu = nu;

  sol.p_opt.resize(n);
  sol.lambda_lo = Vector<Scalar>::Zero(n);
  sol.lambda_hi = Vector<Scalar>::Zero(n);
  for (Index i = 0; i < n; ++i) {
    const Scalar unclipped = p.p_star()(i) - nu / m(i);
    if (unclipped >= p.p_hi()(i)) {
      sol.p_opt(i) = p.p_hi()(i);
      sol.clipped_upper.push_back(i);
      sol.lambda_hi(i) =
          -(m(i) * (p.p_hi()(i) - p.p_star()(i)) + nu) / p.sqrt_k_i()(i);
    } else if (unclipped <= p.p_lo()(i)) {
      sol.p_opt(i) = p.p_lo()(i);
      sol.clipped_lower.push_back(i);
      sol.lambda_lo(i) =
          (m(i) * (p.p_lo()(i) - p.p_star()(i)) + nu) / p.sqrt_k_i()(i);
    } else {
      sol.p_opt(i) = unclipped;
    }
  }
  // A component clipped exactly at its breakpoint can give -0 or a rounding
  // negative; the true multiplier is zero there.
  sol.lambda_lo = sol.lambda_lo.cwiseMax(Scalar(0));
  sol.lambda_hi = sol.lambda_hi.cwiseMax(Scalar(0));

  sol.theta = recover_theta(p.transform(), sol.p_opt, p.p_load());
  return sol;
}

}  // namespace pdflow

#endif  // PDFLOW_ORACLE_HPP
