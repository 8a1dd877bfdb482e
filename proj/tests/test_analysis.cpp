#include "examples.hpp"
#include "pdflow/analysis.hpp"
#include "pdflow/dynamics.hpp"
#include "pdflow/random_instance.hpp"

#include <doctest.h>

#include <random>

using namespace pdflow;
using test::vec;

TEST_CASE("predict examples") {
  SUBCASE("balanced") {
    const auto r = predict(test::balanced_pair());
    CHECK(r.frequency_case == FrequencyCase::balanced);
    CHECK(r.omega_s == 0.0);
    CHECK(r.active_lower.empty());
    CHECK(r.active_upper.empty());
  }
  SUBCASE("upper saturation") {
    // (0 + 0.25 - 0.5) / (1/2)
    const auto r = predict(test::example_e());
    CHECK(r.frequency_case == FrequencyCase::above_dispatch);
    CHECK(r.omega_s == doctest::Approx(-0.5));
    CHECK(r.active_upper == std::vector<Index>{0});
    CHECK(r.active_lower.empty());
  }
  SUBCASE("mirrored upper saturation") {
    const auto r = predict(test::example_e_mirror());
    CHECK(r.frequency_case == FrequencyCase::below_dispatch);
    CHECK(r.omega_s == doctest::Approx(0.5));
    CHECK(r.active_lower == std::vector<Index>{0});
    CHECK(r.active_upper.empty());
  }
  SUBCASE("invalid instance") {
    const FlowProblem<double> p(test::pair_graph(),
                                test::params(vec({1, 0}), vec({-1, -1}), vec({1, 1}), vec({1, 1})),
                                vec({0, 0}));
    CHECK_THROWS_AS(predict(p), ValidationError);
  }
}

TEST_CASE("predict properties") {
  std::mt19937_64 rng(51);
  int balanced = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto p = random_problem<double>(rng);
    const auto r = predict(p);
    const double imbalance = p.p_star().sum() - p.p_load().sum();
    CAPTURE(trial);

    // The balanced case reports exactly zero; otherwise the formula must match nu.
    if (r.frequency_case != FrequencyCase::balanced) {
      CHECK(std::abs(r.omega_s - r.oracle_nu) < 1e-9);
    } else {
      ++balanced;
      CHECK(std::abs(r.oracle_nu) < 1e-9);
    }
    if (imbalance > kBalanceTol) CHECK(r.omega_s > 0);
    if (imbalance < -kBalanceTol) CHECK(r.omega_s < 0);
    if (std::abs(imbalance) <= kBalanceTol) CHECK(r.omega_s == 0.0);
    if (imbalance > 0) CHECK(r.active_upper.empty());
    if (imbalance < 0) CHECK(r.active_lower.empty());

    // No graph term: re-predict on an unrelated graph over the same nodes.
    const auto g = random_graph<double>(rng, p.num_nodes(), Topology::any);
    const FlowProblem<double> q(g, p.params(), p.p_load());
    CHECK(std::abs(predict(q).omega_s - r.omega_s) < 1e-12);
  }
  CHECK(balanced > 0);
}

TEST_CASE("edge split") {
  std::mt19937_64 rng(52);
  SUBCASE("trees have no kernel") {
    InstanceOptions opt;
    opt.topology = Topology::tree;
    for (int trial = 0; trial < 30; ++trial) {
      const auto p = random_problem<double>(rng, opt);
      const auto s = edge_split(p);
      CHECK(s.gamma_zero.cols() == 0);
      CHECK(s.gamma_plus.cols() == p.num_edges());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(reduced_hessian(p, s));
      CHECK(es.eigenvalues().minCoeff() > 0);
    }
  }
  SUBCASE("triangle with unit weights and M = I") {
    const FlowProblem<double> p(
        NetworkGraph<double>(3, {{0, 1, 1.0}, {0, 2, 1.0}, {1, 2, 1.0}}),
        test::params(vec({0, 0, 0}), vec({-1, -1, -1}), vec({1, 1, 1}), vec({1, 1, 1})),
        vec({0, 0, 0}));
    const auto s = edge_split(p);
    CHECK(s.gamma_zero.cols() == 1);
    // V B^T B V = B^T B has spectrum {0, 3, 3}, the nonzero part of L's.
    CHECK(s.eigenvalues(1) == doctest::Approx(3.0));
    CHECK(s.eigenvalues(2) == doctest::Approx(3.0));
  }
  SUBCASE("reconstruction and kernel conservation") {
    InstanceOptions opt;
    opt.topology = Topology::cyclic;
    for (int trial = 0; trial < 10; ++trial) {
      const auto p = random_problem<double>(rng, opt);
      const auto s = edge_split(p);
      CHECK(s.gamma_zero.cols() == p.num_edges() - p.num_nodes() + 1);
      Eigen::MatrixXd gamma(p.num_edges(), p.num_edges());
      gamma << s.gamma_zero, s.gamma_plus;
      const Eigen::MatrixXd rebuilt = gamma * s.eigenvalues.asDiagonal() * gamma.transpose();
      CHECK((rebuilt - edge_hessian(p)).norm() < 1e-10);
      CHECK((gamma.transpose() * gamma - Eigen::MatrixXd::Identity(p.num_edges(), p.num_edges()))
                .norm() < 1e-10);
      CHECK(reduced_linear_term(p, s).size() == s.gamma_plus.cols());

      IntegrationOptions io;
      io.t_end = 10.0;
      io.sample_every = 100;
      const PrimalDualState<double> s0{random_vector<double>(rng, p.num_edges()),
                                       random_duals<double>(rng, p.num_nodes()),
                                       random_duals<double>(rng, p.num_nodes())};
      const auto traj = integrate(System::edge_primal_dual, p, s0, io);
      const Eigen::VectorXd g0 = s.gamma_zero.transpose() * s0.primal;
      for (const auto& st : traj.states) {
        CHECK((s.gamma_zero.transpose() * st.primal - g0).cwiseAbs().maxCoeff() < 1e-8);
      }
    }
  }
}

TEST_CASE("cross-coordinate check") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = random_problem<double>(rng);
    const auto sol = solve_oracle(p);

    const auto at = verify_cross_coordinates(p, sol.theta, sol.lambda_lo, sol.lambda_hi);
    CHECK(at.nodal_accepts);
    CHECK(at.edge_accepts);
    CHECK(at.numerically_consistent);

    const Eigen::VectorXd shifted = sol.theta.array() + uniform(rng, -4, 4);
    const auto sh = verify_cross_coordinates(p, shifted, sol.lambda_lo, sol.lambda_hi);
    CHECK(sh.nodal_accepts);
    CHECK(sh.edge_accepts);

    const Eigen::VectorXd theta = random_vector<double>(rng, p.num_nodes(), -3, 3);
    const auto off = verify_cross_coordinates(p, theta, random_duals<double>(rng, p.num_nodes()),
                                              random_duals<double>(rng, p.num_nodes()));
    CHECK_FALSE(off.nodal_accepts);
    CHECK_FALSE(off.edge_accepts);
    CHECK(off.agree());
    CHECK(off.numerically_consistent);
  }
}
