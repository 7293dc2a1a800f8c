#pragma once

// Weighted directed graph and its Laplacian.
//
// Edge direction convention: an Edge{to, from, weight} means node `to`
// receives information from node `from` with coupling weight a_{to,from}.
// The Laplacian is row-based: [L]_ii = sum of incoming weights of node i,
// [L]_ij = -a_ij for i != j, so every row sums to zero.

#include "cascade/types.hpp"

#include <algorithm>
#include <set>
#include <utility>
#include <vector>

namespace cascade {

template <typename Scalar = double>
struct Edge {
  Index to;       // receiver
  Index from;     // sender
  Scalar weight;  // a_{to,from} >= 0
};

template <typename Scalar = double>
class DirectedGraph {
 public:
  DirectedGraph(Index node_count, std::vector<Edge<Scalar>> edges)
      : node_count_(node_count), edges_(std::move(edges)) {
    if (node_count_ <= 0) {
      throw Error(errc::index_out_of_range, "node count must be positive");
    }
    std::set<std::pair<Index, Index>> seen;
    for (const auto& e : edges_) {
      if (e.to < 0 || e.to >= node_count_ || e.from < 0 || e.from >= node_count_) {
        throw Error(errc::index_out_of_range,
                    "edge (" + std::to_string(e.to) + " <- " + std::to_string(e.from) +
                        ") outside [0, " + std::to_string(node_count_) + ")");
      }
      if (e.to == e.from) {
        throw Error(errc::self_loop, "self-loop on node " + std::to_string(e.to));
      }
      if (!(e.weight >= Scalar(0))) {
        throw Error(errc::negative_weight,
                    "edge (" + std::to_string(e.to) + " <- " + std::to_string(e.from) +
                        ") has negative weight");
      }
      if (!seen.insert({e.to, e.from}).second) {
        throw Error(errc::duplicate_edge,
                    "duplicate edge (" + std::to_string(e.to) + " <- " +
                        std::to_string(e.from) + ")");
      }
    }
  }

  Index node_count() const { return node_count_; }
  const std::vector<Edge<Scalar>>& edges() const { return edges_; }

  /// Adjacency along information flow: result[j] lists all i with an edge
  /// i <- j. Neighbor lists are sorted, so traversals are input-order
  /// independent.
  std::vector<std::vector<Index>> flow_adjacency() const {
    std::vector<std::vector<Index>> adj(static_cast<std::size_t>(node_count_));
    for (const auto& e : edges_) adj[static_cast<std::size_t>(e.from)].push_back(e.to);
    for (auto& nbrs : adj) std::sort(nbrs.begin(), nbrs.end());
    return adj;
  }

 private:
  Index node_count_;
  std::vector<Edge<Scalar>> edges_;
};

/// Row Laplacian of the coupling graph: diagonal holds each node's total
/// incoming weight, off-diagonals are -a_ij. Row sums are exactly zero for
/// integer weights and zero to rounding for reals.
template <typename Scalar>
MatrixX<Scalar> laplacian(const DirectedGraph<Scalar>& g) {
  const Index n = g.node_count();
  MatrixX<Scalar> L = MatrixX<Scalar>::Zero(n, n);
  for (const auto& e : g.edges()) {
    L(e.to, e.from) -= e.weight;
    L(e.to, e.to) += e.weight;
  }
  return L;
}

/// Rebuilds the coupling graph encoded by a Laplacian: every nonzero
/// off-diagonal entry -a_ij becomes the edge i <- j.
template <typename Scalar>
DirectedGraph<Scalar> graph_from_laplacian(const MatrixX<Scalar>& L) {
  if (L.rows() != L.cols()) {
    throw Error(errc::dimension_mismatch, "Laplacian must be square");
  }
  std::vector<Edge<Scalar>> edges;
  for (Index i = 0; i < L.rows(); ++i) {
    for (Index j = 0; j < L.cols(); ++j) {
      if (i != j && L(i, j) != Scalar(0)) edges.push_back({i, j, -L(i, j)});
    }
  }
  return DirectedGraph<Scalar>(L.rows(), std::move(edges));
}

/// Relabels nodes: node v of `g` becomes node sigma[v]. Edge order and
/// weights are preserved.
template <typename Scalar>
DirectedGraph<Scalar> relabel(const DirectedGraph<Scalar>& g, const std::vector<Index>& sigma) {
  if (static_cast<Index>(sigma.size()) != g.node_count()) {
    throw Error(errc::dimension_mismatch, "relabeling size mismatch");
  }
  std::vector<Edge<Scalar>> edges;
  edges.reserve(g.edges().size());
  for (const auto& e : g.edges()) {
    edges.push_back({sigma[static_cast<std::size_t>(e.to)],
                     sigma[static_cast<std::size_t>(e.from)], e.weight});
  }
  return DirectedGraph<Scalar>(g.node_count(), std::move(edges));
}

}  // namespace cascade
