#ifndef PDFLOW_RANDOM_INSTANCE_HPP
#define PDFLOW_RANDOM_INSTANCE_HPP

#include "pdflow/problem.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace pdflow {

enum class Topology { any, tree, cyclic };

/// Ranges for randomly generated problem instances. Every generated instance
/// satisfies both feasibility assumptions with a margin.
struct InstanceOptions {
  Index min_nodes = 2;
  Index max_nodes = 8;
  Topology topology = Topology::any;
  double weight_lo = 0.5, weight_hi = 2.0;
  double gain_lo = 0.5, gain_hi = 2.0;  // m, k_p, k_i
  double balanced_fraction = 0.1;       // share of instances with sum P_L == sum P*
  double min_imbalance = 0.05;          // |sum P* - sum P_L| otherwise
  double load_margin = 0.02;            // relative distance of sum P_L from sum limits
};

template <typename Rng>
double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

template <typename Rng>
Index uniform_index(Rng& rng, Index lo, Index hi) {
  return std::uniform_int_distribution<Index>(lo, hi)(rng);
}

/// Random spanning tree (each node attaches to an earlier one) plus, unless a
/// tree is requested, random chords. `cyclic` guarantees at least one chord.
template <typename Scalar, typename Rng>
NetworkGraph<Scalar> random_graph(Rng& rng, Index n, Topology topology,
                                  double w_lo = 0.5, double w_hi = 2.0) {
  if (topology == Topology::cyclic && n < 3) {
    throw ValidationError("random_graph: a cyclic simple graph needs n >= 3");
  }
  std::vector<WeightedEdge<Scalar>> edges;
  std::set<std::pair<Index, Index>> used;
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::shuffle(order.begin(), order.end(), rng);
  for (Index k = 1; k < n; ++k) {
    Index a = order[static_cast<std::size_t>(k)];
    Index b = order[static_cast<std::size_t>(uniform_index(rng, 0, k - 1))];
    if (a > b) std::swap(a, b);
    used.emplace(a, b);
    edges.push_back({a, b, Scalar(uniform(rng, w_lo, w_hi))});
  }
  if (topology != Topology::tree) {
    std::vector<std::pair<Index, Index>> chords;
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j)
        if (!used.count({i, j})) chords.emplace_back(i, j);
    std::shuffle(chords.begin(), chords.end(), rng);
    Index extra = chords.empty() ? 0 : uniform_index(rng, 0, std::min<Index>(n, Index(chords.size())));
    if (topology == Topology::cyclic) extra = std::max<Index>(extra, 1);
    for (Index k = 0; k < extra; ++k) {
      const auto [a, b] = chords[static_cast<std::size_t>(k)];
      edges.push_back({a, b, Scalar(uniform(rng, w_lo, w_hi))});
    }
  }
  return NetworkGraph<Scalar>(n, std::move(edges));
}

template <typename Scalar, typename Rng>
FlowProblem<Scalar> random_problem(Rng& rng, const InstanceOptions& opt = {}) {
  Index lo_n = opt.min_nodes;
  if (opt.topology == Topology::cyclic) lo_n = std::max<Index>(lo_n, 3);
  const Index n = uniform_index(rng, lo_n, std::max(lo_n, opt.max_nodes));
  NetworkGraph<Scalar> graph =
      random_graph<Scalar>(rng, n, opt.topology, opt.weight_lo, opt.weight_hi);

  NodeParameters<Scalar> par;
  par.p_lo.resize(n);
  par.p_hi.resize(n);
  par.p_star.resize(n);
  par.m.resize(n);
  par.k_p.resize(n);
  par.k_i.resize(n);
  for (Index i = 0; i < n; ++i) {
    par.p_lo(i) = Scalar(uniform(rng, -1.0, 0.0));
    par.p_hi(i) = par.p_lo(i) + Scalar(uniform(rng, 0.5, 2.0));
    par.p_star(i) = par.p_lo(i) + Scalar(uniform(rng, 0.1, 0.9)) * (par.p_hi(i) - par.p_lo(i));
    par.m(i) = Scalar(uniform(rng, opt.gain_lo, opt.gain_hi));
    par.k_p(i) = Scalar(uniform(rng, opt.gain_lo, opt.gain_hi));
    par.k_i(i) = Scalar(uniform(rng, opt.gain_lo, opt.gain_hi));
  }

  const double sum_lo = double(par.p_lo.sum());
  const double sum_hi = double(par.p_hi.sum());
  const double sum_star = double(par.p_star.sum());
  const double margin = opt.load_margin * (sum_hi - sum_lo);

  Vector<Scalar> load(n);
  for (Index i = 0; i < n; ++i) load(i) = Scalar(uniform(rng, -0.5, 0.5));
  load.array() -= load.mean();

  if (uniform(rng, 0.0, 1.0) < opt.balanced_fraction) {
    load += par.p_star;
    load.array() -= load.mean() - Scalar(sum_star / double(n));
    // Close the sum exactly on the last component.
    load(n - 1) = Scalar(0);
    load(n - 1) = par.p_star.sum() - load.sum();
  } else {
    double total = sum_star;
    while (std::abs(total - sum_star) < opt.min_imbalance) {
      total = uniform(rng, sum_lo + margin, sum_hi - margin);
    }
    load.array() += Scalar(total / double(n));
  }
  return FlowProblem<Scalar>(std::move(graph), std::move(par), std::move(load));
}

/// Random nonnegative duals, roughly half of them exactly zero.
template <typename Scalar, typename Rng>
Vector<Scalar> random_duals(Rng& rng, Index n, double hi = 1.0) {
  Vector<Scalar> v(n);
  for (Index i = 0; i < n; ++i) {
    v(i) = uniform(rng, 0.0, 1.0) < 0.5 ? Scalar(0) : Scalar(uniform(rng, 0.0, hi));
  }
  return v;
}

template <typename Scalar, typename Rng>
Vector<Scalar> random_vector(Rng& rng, Index n, double lo = -1.0, double hi = 1.0) {
  Vector<Scalar> v(n);
  for (Index i = 0; i < n; ++i) v(i) = Scalar(uniform(rng, lo, hi));
  return v;
}

}  // namespace pdflow

#endif  // PDFLOW_RANDOM_INSTANCE_HPP
