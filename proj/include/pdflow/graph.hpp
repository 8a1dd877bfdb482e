#ifndef PDFLOW_GRAPH_HPP
#define PDFLOW_GRAPH_HPP

#include "pdflow/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <utility>
#include <vector>

namespace pdflow {

/// Undirected weighted edge. Orientation is normalized so that tail < head.
template <typename Scalar>
struct WeightedEdge {
  Index tail = 0;
  Index head = 0;
  Scalar weight = Scalar(1);
};

/// Simple, connected, undirected graph with strictly positive edge weights.
///
/// Edges keep the order in which they were given; this ordering fixes the
/// columns of the incidence matrix and the components of edge coordinates.
template <typename Scalar>
class NetworkGraph {
 public:
  NetworkGraph(Index num_nodes, std::vector<WeightedEdge<Scalar>> edges)
      : n_(num_nodes), edges_(std::move(edges)) {
    if (n_ < 2) {
      throw ValidationError("graph needs at least 2 nodes");
    }
    std::set<std::pair<Index, Index>> seen;
    for (std::size_t k = 0; k < edges_.size(); ++k) {
      auto& e = edges_[k];
      if (e.tail > e.head) std::swap(e.tail, e.head);
      if (e.tail < 0 || e.head >= n_) {
        throw ValidationError("edge " + std::to_string(k) +
                              " references a node outside [0, n)");
      }
      if (e.tail == e.head) {
        throw StructuralError("edge " + std::to_string(k) + " is a self-loop");
      }
      if (!(e.weight > Scalar(0)) || !std::isfinite(double(e.weight))) {
        throw ValidationError("edge " + std::to_string(k) +
                              " has a nonpositive weight");
      }
      if (!seen.emplace(e.tail, e.head).second) {
        throw StructuralError("edge " + std::to_string(k) + " duplicates (" +
                              std::to_string(e.tail) + ", " +
                              std::to_string(e.head) + ")");
      }
    }
    if (!connected()) {
      throw StructuralError("graph is not connected");
    }
  }

  Index num_nodes() const noexcept { return n_; }
  Index num_edges() const noexcept { return static_cast<Index>(edges_.size()); }
  const std::vector<WeightedEdge<Scalar>>& edges() const noexcept {
    return edges_;
  }

 private:
  bool connected() const {
    std::vector<Index> parent(static_cast<std::size_t>(n_));
    std::iota(parent.begin(), parent.end(), Index{0});
    auto find = [&](Index x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    Index components = n_;
    for (const auto& e : edges_) {
      Index a = find(e.tail), b = find(e.head);
      if (a != b) {
        parent[a] = b;
        --components;
      }
    }
    return components == 1;
  }

  Index n_;
  std::vector<WeightedEdge<Scalar>> edges_;
};

/// Incidence, edge weights and Laplacian of a NetworkGraph.
///
/// laplacian == incidence * diag(sqrt_weights)^2 * incidence^T.
template <typename Scalar>
struct EdgeTransform {
  Matrix<Scalar> incidence;    // n x e, +1 at tail, -1 at head
  Vector<Scalar> sqrt_weights; // diagonal of V
  Matrix<Scalar> laplacian;    // n x n

  Index num_nodes() const { return incidence.rows(); }
  Index num_edges() const { return incidence.cols(); }

  auto V() const { return sqrt_weights.asDiagonal(); }
  Vector<Scalar> weights() const { return sqrt_weights.array().square(); }
};

template <typename Scalar>
EdgeTransform<Scalar> build_transform(const NetworkGraph<Scalar>& g) {
  const Index n = g.num_nodes();
  const Index e = g.num_edges();
  EdgeTransform<Scalar> t;
  t.incidence = Matrix<Scalar>::Zero(n, e);
  t.sqrt_weights.resize(e);
  t.laplacian = Matrix<Scalar>::Zero(n, n);
  for (Index k = 0; k < e; ++k) {
    const auto& edge = g.edges()[static_cast<std::size_t>(k)];
    t.incidence(edge.tail, k) = Scalar(1);
    t.incidence(edge.head, k) = Scalar(-1);
    t.sqrt_weights(k) = std::sqrt(edge.weight);
    // Assemble L entrywise so that every row sums to exactly zero.
    t.laplacian(edge.tail, edge.tail) += edge.weight;
    t.laplacian(edge.head, edge.head) += edge.weight;
    t.laplacian(edge.tail, edge.head) -= edge.weight;
    t.laplacian(edge.head, edge.tail) -= edge.weight;
  }
  return t;
}

/// eta = V B^T theta
template <typename Scalar, typename Derived>
Vector<Scalar> to_edge_coords(const EdgeTransform<Scalar>& t,
                              const Eigen::MatrixBase<Derived>& theta) {
  detail::require_size(theta, t.num_nodes(), "to_edge_coords(theta)");
  return t.V() * (t.incidence.transpose() * theta);
}

/// B V eta, i.e. the network injection L theta when eta = V B^T theta.
template <typename Scalar, typename Derived>
Vector<Scalar> from_edge_coords(const EdgeTransform<Scalar>& t,
                                const Eigen::MatrixBase<Derived>& eta) {
  detail::require_size(eta, t.num_edges(), "from_edge_coords(eta)");
  return t.incidence * (t.V() * eta);
}

template <typename Scalar>
bool is_tree(const NetworkGraph<Scalar>& g) {
  return g.num_edges() == g.num_nodes() - 1;
}

/// v - mean(v) * 1
template <typename Derived>
auto project_off_consensus(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  Vector<Scalar> out = v;
  if (out.size() > 0) out.array() -= out.mean();
  return out;
}

/// Numerical rank with the shared relative threshold.
template <typename Derived>
Index numerical_rank(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix<Scalar>> svd(a);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == Scalar(0)) return 0;
  const Scalar cutoff = Scalar(kRankRelTol) * s(0);
  return static_cast<Index>((s.array() > cutoff).count());
}

}  // namespace pdflow

#endif  // PDFLOW_GRAPH_HPP
