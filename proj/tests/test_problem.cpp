#include "examples.hpp"
#include "pdflow/oracle.hpp"
#include "pdflow/random_instance.hpp"

#include <doctest.h>

#include <random>

using namespace pdflow;
using test::vec;

TEST_CASE("validate") {
  SUBCASE("feasible instance passes") {
    // Sums: -2 < 0.4 < 2, and every setpoint inside its box.
    const FlowProblem<double> p(test::pair_graph(),
                                test::params(vec({0, 0}), vec({-1, -1}), vec({1, 1}), vec({1, 1})),
                                vec({0.5, -0.1}));
    CHECK(validate(p).ok());
  }
  SUBCASE("setpoint on the upper limit") {
    const FlowProblem<double> p(test::pair_graph(),
                                test::params(vec({1, 0}), vec({-1, -1}), vec({1, 1}), vec({1, 1})),
                                vec({0.5, -0.1}));
    const auto r = validate(p);
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0].assumption == Assumption::references);
    CHECK(r.violations[0].nodes == std::vector<Index>{0});
  }
  SUBCASE("load sum on the upper sum") {
    const FlowProblem<double> p(test::pair_graph(),
                                test::params(vec({0, 0}), vec({-1, -1}), vec({1, 1}), vec({1, 1})),
                                vec({1.5, 0.5}));
    const auto r = validate(p);
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0].assumption == Assumption::injection_limits);
    CHECK(r.summary().find("assumption 1") != std::string::npos);
  }
  SUBCASE("inverted box is reported with its node") {
    const FlowProblem<double> p(test::pair_graph(),
                                test::params(vec({0, 0}), vec({-1, 2}), vec({1, 1}), vec({1, 1})),
                                vec({0, 0}));
    const auto r = validate(p);
    CHECK_FALSE(r.ok());
    CHECK(r.violations[0].nodes == std::vector<Index>{1});
  }
}

TEST_CASE("problem construction errors") {
  CHECK_THROWS_AS(FlowProblem<double>(test::pair_graph(),
                                      test::params(vec({0, 0}), vec({-1, -1}), vec({1, 1}),
                                                   vec({1, 0})),
                                      vec({0, 0})),
                  ValidationError);
  CHECK_THROWS_AS(FlowProblem<double>(test::pair_graph(),
                                      test::params(vec({0, 0}), vec({-1, -1}), vec({1, 1}),
                                                   vec({1, 1})),
                                      vec({0, 0, 0})),
                  ValidationError);
}

TEST_CASE("injections") {
  const FlowProblem<double> p(test::pair_graph(),
                              test::params(vec({0, 0}), vec({-1, -1}), vec({1, 1}), vec({1, 1})),
                              vec({0.5, -0.5}));
  CHECK(injections(p, Eigen::Vector2d::Zero()).isApprox(p.p_load()));
  CHECK(injections(p, Eigen::Vector2d::Constant(4.2)).isApprox(p.p_load()));
  CHECK(injections(p, Eigen::Vector2d(-0.25, 0.25)).norm() < 1e-15);

  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const auto q = random_problem<double>(rng);
    const Eigen::VectorXd theta = random_vector<double>(rng, q.num_nodes(), -3, 3);
    CHECK(std::abs(injections(q, theta).sum() - q.p_load().sum()) < 1e-12);
  }
}

TEST_CASE("violation") {
  const FlowProblem<double> p(
      test::pair_graph(),
      test::params(vec({0.5, 0}), vec({0.2, -1}), vec({1.1, 1}), vec({1, 1})),
      vec({0.5, 0}));
  SUBCASE("componentwise arithmetic") {
    const Eigen::VectorXd g = violation(p, Eigen::Vector2d(0.7, 0));
    CHECK(g(0) == doctest::Approx(-1.0));
    CHECK(g(2) == doctest::Approx(0.1));
  }
  SUBCASE("strictly feasible") {
    CHECK(violation(p, Eigen::Vector2d(0.1, 0)).maxCoeff() < 0);
  }
  SUBCASE("boundary") {
    const Eigen::VectorXd g = violation(p, Eigen::Vector2d(0.6, 1.0));
    CHECK(g(2) == 0.0);
    CHECK(g(3) == 0.0);
  }
}

TEST_CASE("objective") {
  const FlowProblem<double> p(test::pair_graph(),
                              test::params(vec({0, 0}), vec({-1, -1}), vec({1, 1}), vec({1, 1})),
                              vec({0.5, -0.5}));
  // L theta = (-0.5, 0.5): 1/2 * 0.5 + (0.5, -0.5).(-0.5, 0.5) = -0.25
  CHECK(objective_nodal(p, Eigen::Vector2d(-0.25, 0.25)) == doctest::Approx(-0.25));
  CHECK(objective_nodal(p, Eigen::Vector2d::Constant(3.0)) == 0.0);

  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    const auto q = random_problem<double>(rng);
    const Index n = q.num_nodes();
    const Eigen::VectorXd theta = random_vector<double>(rng, n, -2, 2);
    const Eigen::VectorXd d = q.p_load() - q.p_star();
    const double constant = 0.5 * d.dot(q.m().cwiseProduct(d));
    CHECK(objective_nodal(q, theta) + constant ==
          doctest::Approx(objective_injections(q, injections(q, theta))).epsilon(1e-12));
    const Eigen::VectorXd shifted = theta.array() + uniform(rng, -5, 5);
    CHECK(objective_nodal(q, shifted) == doctest::Approx(objective_nodal(q, theta)).epsilon(1e-12));
  }
}

TEST_CASE("nodal KKT residuals") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const auto q = random_problem<double>(rng);
    const auto sol = solve_oracle(q);
    const auto at = kkt_residual_nodal(q, sol.theta, sol.lambda_lo, sol.lambda_hi);
    CHECK(at.residuals.max() < 1e-8);

    const Eigen::VectorXd shifted = sol.theta.array() + uniform(rng, -10, 10);
    const auto sh = kkt_residual_nodal(q, shifted, sol.lambda_lo, sol.lambda_hi);
    CHECK(sh.residuals.stationarity == doctest::Approx(at.residuals.stationarity).epsilon(1e-6));
    CHECK(std::abs(sh.residuals.max() - at.residuals.max()) < 1e-10);
  }

  const auto p = test::example_e();
  const auto sol = solve_oracle(p);
  Eigen::VectorXd bad = sol.lambda_lo;
  bad(1) = -0.1;
  const auto r = kkt_residual_nodal(p, sol.theta, bad, sol.lambda_hi);
  CHECK(r.residuals.dual_feasibility == doctest::Approx(0.1));
  CHECK_FALSE(r.accepted());
}

TEST_CASE("edge KKT residuals") {
  std::mt19937_64 rng(24);
  InstanceOptions opt;
  opt.topology = Topology::cyclic;
  for (int trial = 0; trial < 100; ++trial) {
    const auto q = random_problem<double>(rng, opt);
    const auto sol = solve_oracle(q);
    const Eigen::VectorXd eta = to_edge_coords(q.transform(), sol.theta);
    const auto r = kkt_residual_edge(q, eta, sol.lambda_lo, sol.lambda_hi);
    CHECK(r.residuals.max() < 1e-8);

    // Add a circulation: a vector in ker(B V).
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(q.transform().incidence * q.transform().V(),
                                          Eigen::ComputeFullV);
    const Eigen::VectorXd kernel = svd.matrixV().col(q.num_edges() - 1);
    REQUIRE((q.transform().incidence * q.transform().V() * kernel).norm() < 1e-10);
    const Eigen::VectorXd eta2 = eta + 0.7 * kernel;
    const auto r2 = kkt_residual_edge(q, eta2, sol.lambda_lo, sol.lambda_hi);
    CHECK(std::abs(r2.residuals.stationarity - r.residuals.stationarity) < 1e-10);
    const Eigen::VectorXd g1 = violation(q, from_edge_coords(q.transform(), eta));
    const Eigen::VectorXd g2 = violation(q, from_edge_coords(q.transform(), eta2));
    CHECK((g1 - g2).norm() < 1e-10);
  }

  // P_L outside the box at node 0, so eta = 0 (P = P_L) is infeasible.
  const FlowProblem<double> p(test::pair_graph(),
                              test::params(vec({0, 0}), vec({-1, -1}), vec({1, 1}), vec({1, 1})),
                              vec({1.5, -1.0}));
  const Eigen::VectorXd zero_eta = Eigen::VectorXd::Zero(1), zero_dual = Eigen::VectorXd::Zero(2);
  const auto r = kkt_residual_edge(p, zero_eta, zero_dual, zero_dual);
  CHECK(r.residuals.primal_feasibility == doctest::Approx(0.5));
}

TEST_CASE("active sets") {
  SUBCASE("interior point") {
    const auto p = test::balanced_pair();
    const auto s = active_sets(p, Eigen::Vector2d(-0.25, 0.25));
    CHECK(s.at_lower.empty());
    CHECK(s.at_upper.empty());
  }
  SUBCASE("upper saturation of node 0") {
    const auto p = test::example_e();
    const auto sol = solve_oracle(p);
    const auto s = active_sets(p, sol.theta);
    CHECK(s.at_upper == std::vector<Index>{0});
    CHECK(s.at_lower.empty());
  }
  SUBCASE("both limits within tolerance") {
    const FlowProblem<double> p(
        test::pair_graph(),
        test::params(vec({0.05, 0}), vec({0, -1}), vec({0.1, 1}), vec({1, 1})), vec({0.05, 0}));
    CHECK_THROWS_AS(active_sets_of_injections(p, Eigen::Vector2d(0.05, 0), 0.2), ValidationError);
  }
  SUBCASE("oracle points have mutually exclusive active sets") {
    std::mt19937_64 rng(25);
    for (int trial = 0; trial < 300; ++trial) {
      const auto q = random_problem<double>(rng);
      const auto sol = solve_oracle(q);
      const auto s = active_sets_of_injections(q, sol.p_opt);
      CHECK(s.mutually_exclusive());
    }
  }
}
