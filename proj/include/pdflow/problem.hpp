#ifndef PDFLOW_PROBLEM_HPP
#define PDFLOW_PROBLEM_HPP

#include "pdflow/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace pdflow {

/// Per-node converter data. All quantities per-unit.
template <typename Scalar>
struct NodeParameters {
  Vector<Scalar> p_star;  // setpoints
  Vector<Scalar> p_lo;    // lower injection limits
  Vector<Scalar> p_hi;    // upper injection limits
  Vector<Scalar> m;       // droop coefficients (objective weights)
  Vector<Scalar> k_p;     // proportional limit gains
  Vector<Scalar> k_i;     // integral limit gains
};

/// Constrained flow problem
///
///   min 1/2 |P - P*|_M^2   s.t.  P_lo <= P <= P_hi,  P = L theta + P_L
///
/// together with the controller gains that define the associated dynamics.
/// Immutable once built; `with_load` derives the problem for another load.
template <typename Scalar>
class FlowProblem {
 public:
  FlowProblem(NetworkGraph<Scalar> graph, NodeParameters<Scalar> params,
              Vector<Scalar> p_load)
      : graph_(std::move(graph)),
        transform_(build_transform(graph_)),
        params_(std::move(params)),
        p_load_(std::move(p_load)) {
    const Index n = graph_.num_nodes();
    detail::require_size(params_.p_star, n, "p_star");
    detail::require_size(params_.p_lo, n, "p_lo");
    detail::require_size(params_.p_hi, n, "p_hi");
    detail::require_size(params_.m, n, "m");
    detail::require_size(params_.k_p, n, "k_p");
    detail::require_size(params_.k_i, n, "k_i");
    detail::require_size(p_load_, n, "p_load");
    auto positive = [](const Vector<Scalar>& v, const char* name) {
      for (Index i = 0; i < v.size(); ++i) {
        if (!(v(i) > Scalar(0)) || !std::isfinite(double(v(i)))) {
          throw ValidationError(std::string(name) + "[" + std::to_string(i) +
                                "] must be strictly positive");
        }
      }
    };
    positive(params_.m, "m");
    positive(params_.k_p, "k_p");
    positive(params_.k_i, "k_i");
    sqrt_k_i_ = params_.k_i.array().sqrt();
  }

  FlowProblem with_load(Vector<Scalar> p_load) const {
    return FlowProblem(graph_, params_, std::move(p_load));
  }

  Index num_nodes() const { return graph_.num_nodes(); }
  Index num_edges() const { return graph_.num_edges(); }

  const NetworkGraph<Scalar>& graph() const { return graph_; }
  const EdgeTransform<Scalar>& transform() const { return transform_; }
  const NodeParameters<Scalar>& params() const { return params_; }

  const Vector<Scalar>& p_star() const { return params_.p_star; }
  const Vector<Scalar>& p_load() const { return p_load_; }
  const Vector<Scalar>& p_lo() const { return params_.p_lo; }
  const Vector<Scalar>& p_hi() const { return params_.p_hi; }
  const Vector<Scalar>& m() const { return params_.m; }
  const Vector<Scalar>& k_p() const { return params_.k_p; }
  const Vector<Scalar>& k_i() const { return params_.k_i; }
  /// Diagonal of K_I = diag(sqrt(k_i)).
  const Vector<Scalar>& sqrt_k_i() const { return sqrt_k_i_; }

 private:
  NetworkGraph<Scalar> graph_;
  EdgeTransform<Scalar> transform_;
  NodeParameters<Scalar> params_;
  Vector<Scalar> p_load_;
  Vector<Scalar> sqrt_k_i_;
};

// ---------------------------------------------------------------------------
// Feasibility assumptions

enum class Assumption { injection_limits = 1, references = 2 };

struct AssumptionViolation {
  Assumption assumption;
  std::vector<Index> nodes;  // empty when the violated condition is a sum
  std::string message;
};

struct ValidationReport {
  std::vector<AssumptionViolation> violations;
  bool ok() const { return violations.empty(); }
  std::string summary() const {
    std::string out;
    for (const auto& v : violations) {
      if (!out.empty()) out += "; ";
      out += v.message;
    }
    return out;
  }
};

/// Checks the feasible-limits/disturbance assumption and the
/// feasible-references assumption. Passing certifies a strictly feasible
/// theta exists.
template <typename Scalar>
ValidationReport validate(const FlowProblem<Scalar>& p) {
  ValidationReport report;
  auto join = [](const std::vector<Index>& idx) {
    std::string s;
    for (Index i : idx) s += (s.empty() ? "" : ",") + std::to_string(i);
    return s;
  };

  std::vector<Index> bad_box;
  for (Index i = 0; i < p.num_nodes(); ++i) {
    if (!(p.p_lo()(i) < p.p_hi()(i))) bad_box.push_back(i);
  }
  if (!bad_box.empty()) {
    report.violations.push_back(
        {Assumption::injection_limits, bad_box,
         "assumption 1: p_lo < p_hi fails at nodes {" + join(bad_box) + "}"});
  }
  const Scalar sum_lo = p.p_lo().sum();
  const Scalar sum_hi = p.p_hi().sum();
  const Scalar sum_load = p.p_load().sum();
  if (!(sum_lo < sum_load && sum_load < sum_hi)) {
    report.violations.push_back(
        {Assumption::injection_limits, {},
         "assumption 1: sum(p_lo) < sum(p_load) < sum(p_hi) fails (" +
             std::to_string(double(sum_lo)) + ", " +
             std::to_string(double(sum_load)) + ", " +
             std::to_string(double(sum_hi)) + ")"});
  }

  std::vector<Index> bad_ref;
  for (Index i = 0; i < p.num_nodes(); ++i) {
    if (!(p.p_lo()(i) < p.p_star()(i) && p.p_star()(i) < p.p_hi()(i))) {
      bad_ref.push_back(i);
    }
  }
  if (!bad_ref.empty()) {
    report.violations.push_back(
        {Assumption::references, bad_ref,
         "assumption 2: p_lo < p_star < p_hi fails at nodes {" +
             join(bad_ref) + "}"});
  }
  return report;
}

// ---------------------------------------------------------------------------
// Evaluation

/// P = L theta + P_L
template <typename Scalar, typename Derived>
Vector<Scalar> injections(const FlowProblem<Scalar>& p,
                          const Eigen::MatrixBase<Derived>& theta) {
  detail::require_size(theta, p.num_nodes(), "injections(theta)");
  return p.transform().laplacian * theta + p.p_load();
}

/// g(P_N) = (P_lo - P_N - P_L, P_N + P_L - P_hi). Positive entries are
/// violations; the first n entries refer to lower limits.
template <typename Scalar, typename Derived>
Vector<Scalar> violation(const FlowProblem<Scalar>& p,
                         const Eigen::MatrixBase<Derived>& p_net) {
  const Index n = p.num_nodes();
  detail::require_size(p_net, n, "violation(p_net)");
  Vector<Scalar> g(2 * n);
  g.head(n) = p.p_lo() - p_net - p.p_load();
  g.tail(n) = p_net + p.p_load() - p.p_hi();
  return g;
}

/// Reduced nodal objective 1/2 |L theta|_M^2 + (P_L - P*)^T M L theta.
template <typename Scalar, typename Derived>
Scalar objective_nodal(const FlowProblem<Scalar>& p,
                       const Eigen::MatrixBase<Derived>& theta) {
  detail::require_size(theta, p.num_nodes(), "objective_nodal(theta)");
  const Vector<Scalar> p_net = p.transform().laplacian * theta;
  return Scalar(0.5) * p_net.dot(p.m().cwiseProduct(p_net)) +
         (p.p_load() - p.p_star()).dot(p.m().cwiseProduct(p_net));
}

/// Original objective 1/2 |P - P*|_M^2 evaluated at injections P.
template <typename Scalar, typename Derived>
Scalar objective_injections(const FlowProblem<Scalar>& p,
                            const Eigen::MatrixBase<Derived>& power) {
  const Vector<Scalar> d = power - p.p_star();
  return Scalar(0.5) * d.dot(p.m().cwiseProduct(d));
}

// ---------------------------------------------------------------------------
// KKT residuals

template <typename Scalar>
struct KktResiduals {
  Scalar stationarity = Scalar(0);
  Scalar primal_feasibility = Scalar(0);
  Scalar dual_feasibility = Scalar(0);
  Scalar complementary_slackness = Scalar(0);

  Scalar max() const {
    return std::max({stationarity, primal_feasibility, dual_feasibility,
                     complementary_slackness});
  }
};

inline constexpr double kDefaultKktTol = 1e-6;
inline constexpr double kDefaultActiveSetTol = 1e-5;

/// Candidate primal-dual point with its residual breakdown. `primal` holds
/// theta (nodal) or eta (edge) depending on how it was evaluated.
template <typename Scalar>
struct KktPoint {
  Vector<Scalar> primal;
  Vector<Scalar> lambda_lo;
  Vector<Scalar> lambda_hi;
  KktResiduals<Scalar> residuals;

  bool accepted(Scalar tol = Scalar(kDefaultKktTol)) const {
    return residuals.max() < tol;
  }
};

namespace detail {

// Residuals shared by both coordinate systems; only stationarity differs.
template <typename Scalar>
void fill_constraint_residuals(const FlowProblem<Scalar>& p,
                               const Vector<Scalar>& p_net,
                               const Vector<Scalar>& lambda_lo,
                               const Vector<Scalar>& lambda_hi,
                               KktResiduals<Scalar>& r) {
  const Index n = p.num_nodes();
  const Vector<Scalar> g = violation(p, p_net);
  r.primal_feasibility = g.cwiseMax(Scalar(0)).norm();

  Vector<Scalar> stacked(2 * n);
  stacked << lambda_lo, lambda_hi;
  r.dual_feasibility = (-stacked).cwiseMax(Scalar(0)).norm();

  const auto& ki = p.sqrt_k_i();
  r.complementary_slackness =
      lambda_lo.cwiseProduct(ki.cwiseProduct(g.head(n))).norm() +
      lambda_hi.cwiseProduct(ki.cwiseProduct(g.tail(n))).norm();
}

template <typename Scalar>
Vector<Scalar> stationarity_vector(const FlowProblem<Scalar>& p,
                                   const Vector<Scalar>& p_net,
                                   const Vector<Scalar>& lambda_lo,
                                   const Vector<Scalar>& lambda_hi) {
  return p.m().cwiseProduct(p_net + p.p_load() - p.p_star()) +
         p.sqrt_k_i().cwiseProduct(lambda_hi - lambda_lo);
}

}  // namespace detail

/// KKT residuals in nodal coordinates. Stationarity measures the distance of
/// M(L theta + P_L - P*) + K_I(lambda_hi - lambda_lo) from span(1).
/// Duals are evaluated as given, without clamping.
template <typename Scalar>
KktPoint<Scalar> kkt_residual_nodal(const FlowProblem<Scalar>& p,
                                    const Vector<Scalar>& theta,
                                    const Vector<Scalar>& lambda_lo,
                                    const Vector<Scalar>& lambda_hi) {
  const Index n = p.num_nodes();
  detail::require_size(theta, n, "kkt_residual_nodal(theta)");
  detail::require_size(lambda_lo, n, "kkt_residual_nodal(lambda_lo)");
  detail::require_size(lambda_hi, n, "kkt_residual_nodal(lambda_hi)");
  KktPoint<Scalar> out{theta, lambda_lo, lambda_hi, {}};
  const Vector<Scalar> p_net = p.transform().laplacian * theta;
  out.residuals.stationarity =
      project_off_consensus(
          detail::stationarity_vector(p, p_net, lambda_lo, lambda_hi))
          .norm();
  detail::fill_constraint_residuals(p, p_net, lambda_lo, lambda_hi,
                                    out.residuals);
  return out;
}

/// KKT residuals in edge coordinates; stationarity is |B^T(...)| literally.
template <typename Scalar>
KktPoint<Scalar> kkt_residual_edge(const FlowProblem<Scalar>& p,
                                   const Vector<Scalar>& eta,
                                   const Vector<Scalar>& lambda_lo,
                                   const Vector<Scalar>& lambda_hi) {
  const Index n = p.num_nodes();
  detail::require_size(eta, p.num_edges(), "kkt_residual_edge(eta)");
  detail::require_size(lambda_lo, n, "kkt_residual_edge(lambda_lo)");
  detail::require_size(lambda_hi, n, "kkt_residual_edge(lambda_hi)");
  KktPoint<Scalar> out{eta, lambda_lo, lambda_hi, {}};
  const Vector<Scalar> p_net = from_edge_coords(p.transform(), eta);
  out.residuals.stationarity =
      (p.transform().incidence.transpose() *
       detail::stationarity_vector(p, p_net, lambda_lo, lambda_hi))
          .norm();
  detail::fill_constraint_residuals(p, p_net, lambda_lo, lambda_hi,
                                    out.residuals);
  return out;
}

// ---------------------------------------------------------------------------
// Active sets

struct ActiveSets {
  std::vector<Index> at_lower;
  std::vector<Index> at_upper;
  double tolerance = kDefaultActiveSetTol;

  bool mutually_exclusive() const {
    return at_lower.empty() || at_upper.empty();
  }
};

/// Nodes whose injection sits within `tol` of a limit.
template <typename Scalar, typename Derived>
ActiveSets active_sets_of_injections(const FlowProblem<Scalar>& p,
                                     const Eigen::MatrixBase<Derived>& power,
                                     Scalar tol = Scalar(kDefaultActiveSetTol)) {
  detail::require_size(power, p.num_nodes(), "active_sets(power)");
  ActiveSets s;
  s.tolerance = double(tol);
  for (Index i = 0; i < p.num_nodes(); ++i) {
    const bool lo = std::abs(power(i) - p.p_lo()(i)) <= tol;
    const bool hi = std::abs(power(i) - p.p_hi()(i)) <= tol;
    if (lo && hi) {
      throw ValidationError("node " + std::to_string(i) +
                            " is within tolerance of both limits");
    }
    if (lo) s.at_lower.push_back(i);
    if (hi) s.at_upper.push_back(i);
  }
  return s;
}

template <typename Scalar, typename Derived>
ActiveSets active_sets(const FlowProblem<Scalar>& p,
                       const Eigen::MatrixBase<Derived>& theta,
                       Scalar tol = Scalar(kDefaultActiveSetTol)) {
  return active_sets_of_injections(p, injections(p, theta), tol);
}

}  // namespace pdflow

#endif  // PDFLOW_PROBLEM_HPP
