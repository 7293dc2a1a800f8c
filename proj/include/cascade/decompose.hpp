#pragma once

// Cascade block lower-triangular form of a directed-graph Laplacian.
//
// For a graph with a directed spanning tree, there is a permutation T such
// that T^T L T is block lower triangular with diagonal blocks
// A_ii = L_ii + D_i, where each L_ii is the Laplacian of a strongly
// connected subgraph and D_i is the diagonal matrix of weights arriving
// from earlier blocks. The construction peels root components off the SCC
// condensation layer by layer: the unique root component comes first, and
// whenever the residual graph has several roots they are emitted as
// consecutive mutually uncoupled blocks, smallest original node index
// first. Node order inside a block is the original order.

#include "cascade/graph.hpp"
#include "cascade/scc.hpp"
#include "cascade/types.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace cascade {

/// Which peeling step produced a diagonal block: the initial root-component
/// peel, the unique root of a residual that still has a spanning tree, or
/// one of several roots of a residual without one (those come out as
/// consecutive mutually uncoupled blocks).
enum class BlockOrigin { root_peel, single_root, multi_root };

inline const char* to_string(BlockOrigin o) {
  switch (o) {
    case BlockOrigin::root_peel: return "root_peel";
    case BlockOrigin::single_root: return "single_root";
    case BlockOrigin::multi_root: return "multi_root";
  }
  return "unknown";
}

template <typename Scalar = double>
struct BlockDecomposition {
  /// permutation[k] = original node placed at permuted position k, i.e.
  /// (T^T L T)(k, l) = L(permutation[k], permutation[l]).
  std::vector<Index> permutation;
  std::vector<Index> block_sizes;  // n_1..n_m

  std::vector<MatrixX<Scalar>> diagonal_blocks;            // A_ii
  std::vector<MatrixX<Scalar>> laplacian_parts;            // L_ii
  std::vector<VectorX<Scalar>> degree_parts;               // diag of D_i
  std::vector<std::vector<MatrixX<Scalar>>> coupling_blocks;  // [i][j] = A_ij, j < i
  std::vector<BlockOrigin> trace;                          // per block

  Index node_count() const { return static_cast<Index>(permutation.size()); }
  Index block_count() const { return static_cast<Index>(block_sizes.size()); }

  Index block_offset(Index i) const {
    Index off = 0;
    for (Index k = 0; k < i; ++k) off += block_sizes[static_cast<std::size_t>(k)];
    return off;
  }

  /// Original node ids of block i, in permuted order.
  std::vector<Index> block_nodes(Index i) const {
    const Index off = block_offset(i);
    const Index n = block_sizes[static_cast<std::size_t>(i)];
    return {permutation.begin() + off, permutation.begin() + off + n};
  }
};

/// T^T L T realized through the index map; no arithmetic, entries are moved,
/// not mixed.
template <typename Scalar>
MatrixX<Scalar> apply_permutation(const MatrixX<Scalar>& L, const BlockDecomposition<Scalar>& d) {
  const Index n = d.node_count();
  if (L.rows() != n || L.cols() != n) {
    throw Error(errc::dimension_mismatch,
                "matrix is " + std::to_string(L.rows()) + "x" + std::to_string(L.cols()) +
                    ", decomposition covers " + std::to_string(n) + " nodes");
  }
  MatrixX<Scalar> out(n, n);
  for (Index k = 0; k < n; ++k) {
    for (Index l = 0; l < n; ++l) {
      out(k, l) = L(d.permutation[static_cast<std::size_t>(k)],
                    d.permutation[static_cast<std::size_t>(l)]);
    }
  }
  return out;
}

/// Inverse of apply_permutation: recovers L from T^T L T.
template <typename Scalar>
MatrixX<Scalar> unapply_permutation(const MatrixX<Scalar>& Lp, const BlockDecomposition<Scalar>& d) {
  const Index n = d.node_count();
  if (Lp.rows() != n || Lp.cols() != n) {
    throw Error(errc::dimension_mismatch, "permuted matrix has wrong size");
  }
  MatrixX<Scalar> out(n, n);
  for (Index k = 0; k < n; ++k) {
    for (Index l = 0; l < n; ++l) {
      out(d.permutation[static_cast<std::size_t>(k)],
          d.permutation[static_cast<std::size_t>(l)]) = Lp(k, l);
    }
  }
  return out;
}

/// Reassembles T^T L T from the stored blocks: A_ii on the diagonal, -A_ij
/// below, zeros above.
template <typename Scalar>
MatrixX<Scalar> reconstruct_permuted(const BlockDecomposition<Scalar>& d) {
  const Index n = d.node_count();
  MatrixX<Scalar> out = MatrixX<Scalar>::Zero(n, n);
  const Index m = d.block_count();
  for (Index i = 0; i < m; ++i) {
    const Index oi = d.block_offset(i);
    const Index ni = d.block_sizes[static_cast<std::size_t>(i)];
    out.block(oi, oi, ni, ni) = d.diagonal_blocks[static_cast<std::size_t>(i)];
    for (Index j = 0; j < i; ++j) {
      const Index oj = d.block_offset(j);
      const Index nj = d.block_sizes[static_cast<std::size_t>(j)];
      out.block(oi, oj, ni, nj) =
          -d.coupling_blocks[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return out;
}

namespace detail {

/// Row sums of the coupling blocks of block i, accumulated block-by-block
/// then entry-by-entry. verify_decomposition and the simulator reuse this
/// exact accumulation so the degree identity is reproducible bit for bit.
template <typename Scalar>
VectorX<Scalar> degree_from_couplings(const std::vector<MatrixX<Scalar>>& couplings, Index rows) {
  VectorX<Scalar> d = VectorX<Scalar>::Zero(rows);
  for (const auto& A : couplings) {
    for (Index k = 0; k < rows; ++k) {
      Scalar acc = d(k);
      for (Index l = 0; l < A.cols(); ++l) acc += A(k, l);
      d(k) = acc;
    }
  }
  return d;
}

}  // namespace detail

template <typename Scalar>
BlockDecomposition<Scalar> block_triangularize(const DirectedGraph<Scalar>& g) {
  const SccPartition part = strongly_connected_components(g);
  if (root_component_count(part) != 1) {
    throw Error(errc::no_spanning_tree,
                "graph has " + std::to_string(root_component_count(part)) +
                    " root components; a directed spanning tree requires exactly one");
  }

  const Index c = static_cast<Index>(part.components.size());
  std::vector<std::vector<Index>> succ(static_cast<std::size_t>(c));
  std::vector<Index> indegree(static_cast<std::size_t>(c), 0);
  for (const auto& [u, v] : part.condensation_edges) {
    succ[static_cast<std::size_t>(u)].push_back(v);
    ++indegree[static_cast<std::size_t>(v)];
  }

  BlockDecomposition<Scalar> dec;
  // Layered peel: take all current roots at once. Components are already
  // ordered by smallest contained node, which is the tie-break.
  std::vector<bool> done(static_cast<std::size_t>(c), false);
  std::vector<Index> order;
  Index processed = 0;
  bool first_layer = true;
  while (processed < c) {
    std::vector<Index> roots;
    for (Index k = 0; k < c; ++k) {
      if (!done[static_cast<std::size_t>(k)] && indegree[static_cast<std::size_t>(k)] == 0) {
        roots.push_back(k);
      }
    }
    const BlockOrigin origin = first_layer ? BlockOrigin::root_peel
                               : roots.size() == 1 ? BlockOrigin::single_root
                                                   : BlockOrigin::multi_root;
    for (Index r : roots) {
      order.push_back(r);
      dec.trace.push_back(origin);
      done[static_cast<std::size_t>(r)] = true;
      ++processed;
    }
    for (Index r : roots) {
      for (Index s : succ[static_cast<std::size_t>(r)]) --indegree[static_cast<std::size_t>(s)];
    }
    first_layer = false;
  }

  for (Index k : order) {
    const auto& nodes = part.components[static_cast<std::size_t>(k)];
    dec.block_sizes.push_back(static_cast<Index>(nodes.size()));
    dec.permutation.insert(dec.permutation.end(), nodes.begin(), nodes.end());
  }

  const MatrixX<Scalar> Lp = apply_permutation(laplacian(g), dec);
  const Index m = dec.block_count();
  dec.diagonal_blocks.resize(static_cast<std::size_t>(m));
  dec.laplacian_parts.resize(static_cast<std::size_t>(m));
  dec.degree_parts.resize(static_cast<std::size_t>(m));
  dec.coupling_blocks.resize(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) {
    const Index oi = dec.block_offset(i);
    const Index ni = dec.block_sizes[static_cast<std::size_t>(i)];
    dec.diagonal_blocks[static_cast<std::size_t>(i)] = Lp.block(oi, oi, ni, ni);
    auto& row = dec.coupling_blocks[static_cast<std::size_t>(i)];
    row.reserve(static_cast<std::size_t>(i));
    for (Index j = 0; j < i; ++j) {
      const Index oj = dec.block_offset(j);
      const Index nj = dec.block_sizes[static_cast<std::size_t>(j)];
      row.push_back(-Lp.block(oi, oj, ni, nj));
    }
    dec.degree_parts[static_cast<std::size_t>(i)] = detail::degree_from_couplings(row, ni);
    dec.laplacian_parts[static_cast<std::size_t>(i)] =
        dec.diagonal_blocks[static_cast<std::size_t>(i)] -
        MatrixX<Scalar>(dec.degree_parts[static_cast<std::size_t>(i)].asDiagonal());
  }
  return dec;
}

struct CheckResult {
  std::string name;
  bool pass = false;
  double residual = 0.0;
};

struct DecompositionReport {
  std::vector<CheckResult> checks;
  std::vector<BlockOrigin> trace;

  bool all_pass() const {
    for (const auto& c : checks) {
      if (!c.pass) return false;
    }
    return true;
  }

  const CheckResult* find(const std::string& name) const {
    for (const auto& c : checks) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }
};

/// Re-derives every type invariant of a BlockDecomposition against its
/// source graph and reports the worst residual per invariant. Structural
/// checks demand exact zeros; arithmetic identities are allowed rounding
/// relative to the Laplacian scale (still exactly zero for integer
/// weights). Failures are report entries, never exceptions.
template <typename Scalar>
DecompositionReport verify_decomposition(const DirectedGraph<Scalar>& g,
                                         const BlockDecomposition<Scalar>& d,
                                         double relative_tol = 1e-12) {
  DecompositionReport report;
  report.trace = d.trace;
  const MatrixX<Scalar> L = laplacian(g);
  const double scale = std::max(1.0, static_cast<double>(L.template lpNorm<Eigen::Infinity>()));
  const double tol = relative_tol * scale;
  const Index m = d.block_count();

  auto add = [&report](const std::string& name, double residual, double allowed) {
    report.checks.push_back({name, residual <= allowed, residual});
  };

  {  // permutation is a bijection on [0,N) and block sizes sum to N
    double bad = 0.0;
    if (d.node_count() != g.node_count() || m < 1) bad = 1.0;
    std::vector<bool> hit(static_cast<std::size_t>(g.node_count()), false);
    for (Index v : d.permutation) {
      if (v < 0 || v >= g.node_count() || hit[static_cast<std::size_t>(v)]) bad = 1.0;
      else hit[static_cast<std::size_t>(v)] = true;
    }
    Index sum = 0;
    for (Index s : d.block_sizes) sum += s;
    bad = std::max(bad, static_cast<double>(std::abs(sum - g.node_count())));
    add("block_structure", bad, 0.0);
    if (bad != 0.0) return report;  // remaining checks would index out of range
  }

  const MatrixX<Scalar> Lp = apply_permutation(L, d);

  {  // strictly upper blocks of T^T L T are exactly zero
    double worst = 0.0;
    for (Index i = 0; i < m; ++i) {
      const Index oi = d.block_offset(i);
      const Index ni = d.block_sizes[static_cast<std::size_t>(i)];
      for (Index j = i + 1; j < m; ++j) {
        const Index oj = d.block_offset(j);
        const Index nj = d.block_sizes[static_cast<std::size_t>(j)];
        const double v = static_cast<double>(
            Lp.block(oi, oj, ni, nj).cwiseAbs().maxCoeff());
        worst = std::max(worst, v);
      }
    }
    add("upper_blocks_zero", worst, 0.0);
  }

  {  // stored blocks agree with T^T L T entry for entry
    double worst = 0.0;
    for (Index i = 0; i < m; ++i) {
      const Index oi = d.block_offset(i);
      const Index ni = d.block_sizes[static_cast<std::size_t>(i)];
      worst = std::max(worst, static_cast<double>(
          (d.diagonal_blocks[static_cast<std::size_t>(i)] - Lp.block(oi, oi, ni, ni))
              .cwiseAbs().maxCoeff()));
      for (Index j = 0; j < i; ++j) {
        const Index oj = d.block_offset(j);
        const Index nj = d.block_sizes[static_cast<std::size_t>(j)];
        worst = std::max(worst, static_cast<double>(
            (d.coupling_blocks[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] +
             Lp.block(oi, oj, ni, nj)).cwiseAbs().maxCoeff()));
      }
    }
    add("blocks_match_permuted_laplacian", worst, 0.0);
  }

  {  // A_ii = L_ii + D_i
    double worst = 0.0;
    for (Index i = 0; i < m; ++i) {
      const MatrixX<Scalar> s =
          d.laplacian_parts[static_cast<std::size_t>(i)] +
          MatrixX<Scalar>(d.degree_parts[static_cast<std::size_t>(i)].asDiagonal());
      worst = std::max(worst, static_cast<double>(
          (d.diagonal_blocks[static_cast<std::size_t>(i)] - s).cwiseAbs().maxCoeff()));
    }
    add("diagonal_identity", worst, tol);
  }

  {  // every L_ii has zero row sums
    double worst = 0.0;
    for (Index i = 0; i < m; ++i) {
      worst = std::max(worst, static_cast<double>(
          d.laplacian_parts[static_cast<std::size_t>(i)].rowwise().sum().cwiseAbs().maxCoeff()));
    }
    add("laplacian_row_sums", worst, tol);
  }

  {  // every L_ii is the Laplacian of a strongly connected graph
    double failures = 0.0;
    for (Index i = 0; i < m; ++i) {
      const auto& Li = d.laplacian_parts[static_cast<std::size_t>(i)];
      std::vector<Edge<Scalar>> edges;
      for (Index k = 0; k < Li.rows(); ++k) {
        for (Index l = 0; l < Li.cols(); ++l) {
          if (k != l && Li(k, l) != Scalar(0)) edges.push_back({k, l, -Li(k, l)});
        }
      }
      try {
        DirectedGraph<Scalar> sub(Li.rows(), std::move(edges));
        if (strongly_connected_components(sub).components.size() != 1) failures += 1.0;
      } catch (const Error&) {
        failures += 1.0;  // negative off-diagonal sign pattern
      }
    }
    add("laplacian_strongly_connected", failures, 0.0);
  }

  {  // D_1 = 0 and D_i 1 = sum_j A_ij 1 for i >= 2
    double worst = 0.0;
    if (m >= 1) {
      worst = std::max(worst, static_cast<double>(
          d.degree_parts[0].cwiseAbs().maxCoeff()));
    }
    for (Index i = 1; i < m; ++i) {
      const VectorX<Scalar> expected = detail::degree_from_couplings(
          d.coupling_blocks[static_cast<std::size_t>(i)],
          d.block_sizes[static_cast<std::size_t>(i)]);
      worst = std::max(worst, static_cast<double>(
          (d.degree_parts[static_cast<std::size_t>(i)] - expected).cwiseAbs().maxCoeff()));
    }
    add("degree_identity", worst, tol);
  }

  {  // all A_ij and D_i entries nonnegative
    double worst = 0.0;
    for (Index i = 0; i < m; ++i) {
      worst = std::max(worst, static_cast<double>(
          -std::min(Scalar(0), d.degree_parts[static_cast<std::size_t>(i)].minCoeff())));
      for (const auto& A : d.coupling_blocks[static_cast<std::size_t>(i)]) {
        if (A.size() > 0) {
          worst = std::max(worst, static_cast<double>(-std::min(Scalar(0), A.minCoeff())));
        }
      }
    }
    add("nonnegativity", worst, 0.0);
  }

  return report;
}

}  // namespace cascade
