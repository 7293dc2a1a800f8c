#pragma once

// Shared test machinery: deterministic random-graph generators and the
// independent oracles the tests check the library against. Everything here
// deliberately avoids the library's own SCC/decomposition code paths:
// reachability is plain BFS over the edge list, strong connectivity is
// pairwise reachability, and cascade forms are validated entry by entry.

#include "cascade/graph.hpp"
#include "cascade/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace testsupport {

using cascade::DirectedGraph;
using cascade::Edge;
using cascade::Index;
using Digraph = cascade::DirectedGraph<double>;
using Matrix = cascade::MatrixX<double>;

// ---------------------------------------------------------------------------
// Deterministic randomness (independent of std distribution implementations)

inline bool exact_eq(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

inline Index uniform_index(std::mt19937_64& rng, Index n) {
  return static_cast<Index>(rng() % static_cast<std::uint64_t>(n));
}

inline std::vector<Index> random_permutation(std::mt19937_64& rng, Index n) {
  std::vector<Index> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), Index{0});
  for (Index i = n - 1; i > 0; --i) {
    std::swap(p[static_cast<std::size_t>(i)],
              p[static_cast<std::size_t>(uniform_index(rng, i + 1))]);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Graph generators

struct GraphOptions {
  bool integer_weights = true;
  double max_weight = 5.0;
  double extra_edge_prob = 0.25;
  bool relabel = true;          // hide the construction order
  bool keep_root_isolated = false;  // no incoming edges into node 0, no relabel
};

inline double draw_weight(std::mt19937_64& rng, const GraphOptions& opt) {
  if (opt.integer_weights) {
    return 1.0 + static_cast<double>(uniform_index(rng, static_cast<Index>(opt.max_weight)));
  }
  return uniform(rng, 0.1, opt.max_weight);
}

/// Random digraph guaranteed to contain a directed spanning tree: a random
/// parent tree rooted at node 0 plus extra edges.
inline Digraph random_spanning_tree_graph(std::mt19937_64& rng, Index n,
                                          GraphOptions opt = {}) {
  std::set<std::pair<Index, Index>> used;  // (to, from)
  std::vector<Edge<double>> edges;
  for (Index k = 1; k < n; ++k) {
    const Index parent = uniform_index(rng, k);
    used.insert({k, parent});
    edges.push_back({k, parent, draw_weight(rng, opt)});
  }
  for (Index to = 0; to < n; ++to) {
    for (Index from = 0; from < n; ++from) {
      if (to == from || used.count({to, from})) continue;
      if (opt.keep_root_isolated && to == 0) continue;
      if (uniform01(rng) < opt.extra_edge_prob) {
        used.insert({to, from});
        edges.push_back({to, from, draw_weight(rng, opt)});
      }
    }
  }
  if (opt.relabel && !opt.keep_root_isolated) {
    const auto sigma = random_permutation(rng, n);
    for (auto& e : edges) {
      e.to = sigma[static_cast<std::size_t>(e.to)];
      e.from = sigma[static_cast<std::size_t>(e.from)];
    }
  }
  return Digraph(n, std::move(edges));
}

/// Arbitrary random digraph (may or may not have a spanning tree).
inline Digraph random_digraph(std::mt19937_64& rng, Index n, double edge_prob,
                              GraphOptions opt = {}) {
  std::vector<Edge<double>> edges;
  for (Index to = 0; to < n; ++to) {
    for (Index from = 0; from < n; ++from) {
      if (to != from && uniform01(rng) < edge_prob) {
        edges.push_back({to, from, draw_weight(rng, opt)});
      }
    }
  }
  return Digraph(n, std::move(edges));
}

/// Strongly connected random digraph: a Hamiltonian cycle in shuffled order
/// plus extra edges.
inline Digraph random_strongly_connected(std::mt19937_64& rng, Index n,
                                         GraphOptions opt = {}) {
  const auto order = random_permutation(rng, n);
  std::set<std::pair<Index, Index>> used;
  std::vector<Edge<double>> edges;
  for (Index k = 0; k < n; ++k) {
    const Index from = order[static_cast<std::size_t>(k)];
    const Index to = order[static_cast<std::size_t>((k + 1) % n)];
    if (to == from) continue;  // n == 1
    used.insert({to, from});
    edges.push_back({to, from, draw_weight(rng, opt)});
  }
  for (Index to = 0; to < n; ++to) {
    for (Index from = 0; from < n; ++from) {
      if (to == from || used.count({to, from})) continue;
      if (uniform01(rng) < opt.extra_edge_prob) {
        used.insert({to, from});
        edges.push_back({to, from, draw_weight(rng, opt)});
      }
    }
  }
  return Digraph(n, std::move(edges));
}

// ---------------------------------------------------------------------------
// Reachability oracles (plain BFS over the edge list)

/// reach[i][j] = true iff information from i can reach j (i.e. there is a
/// directed path i -> ... -> j in flow direction).
inline std::vector<std::vector<bool>> reachability(const Digraph& g) {
  const Index n = g.node_count();
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(n));
  for (const auto& e : g.edges()) out[static_cast<std::size_t>(e.from)].push_back(e.to);
  std::vector<std::vector<bool>> reach(static_cast<std::size_t>(n),
                                       std::vector<bool>(static_cast<std::size_t>(n), false));
  for (Index s = 0; s < n; ++s) {
    std::vector<Index> queue{s};
    reach[static_cast<std::size_t>(s)][static_cast<std::size_t>(s)] = true;
    while (!queue.empty()) {
      const Index v = queue.back();
      queue.pop_back();
      for (Index w : out[static_cast<std::size_t>(v)]) {
        if (!reach[static_cast<std::size_t>(s)][static_cast<std::size_t>(w)]) {
          reach[static_cast<std::size_t>(s)][static_cast<std::size_t>(w)] = true;
          queue.push_back(w);
        }
      }
    }
  }
  return reach;
}

inline bool oracle_has_spanning_tree(const Digraph& g) {
  const auto reach = reachability(g);
  for (const auto& row : reach) {
    if (std::all_of(row.begin(), row.end(), [](bool b) { return b; })) return true;
  }
  return false;
}

/// SCC partition via pairwise mutual reachability, components keyed by their
/// smallest node.
inline std::vector<std::vector<Index>> oracle_scc_sets(const Digraph& g) {
  const Index n = g.node_count();
  const auto reach = reachability(g);
  std::vector<bool> assigned(static_cast<std::size_t>(n), false);
  std::vector<std::vector<Index>> sets;
  for (Index i = 0; i < n; ++i) {
    if (assigned[static_cast<std::size_t>(i)]) continue;
    std::vector<Index> comp;
    for (Index j = i; j < n; ++j) {
      if (!assigned[static_cast<std::size_t>(j)] &&
          reach[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] &&
          reach[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]) {
        comp.push_back(j);
        assigned[static_cast<std::size_t>(j)] = true;
      }
    }
    sets.push_back(std::move(comp));
  }
  return sets;
}

/// Strong connectivity of the graph encoded by a matrix's nonzero
/// off-diagonal pattern.
inline bool oracle_matrix_strongly_connected(const Matrix& m) {
  const Index n = m.rows();
  if (n == 1) return true;
  std::vector<Edge<double>> edges;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i != j && m(i, j) != 0.0) edges.push_back({i, j, 1.0});
    }
  }
  const Digraph g(n, std::move(edges));
  const auto reach = reachability(g);
  for (const auto& row : reach) {
    if (!std::all_of(row.begin(), row.end(), [](bool b) { return b; })) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Exhaustive cascade-form oracle
//
// A pair (perm, sizes) is a valid cascade form for L when the permuted
// matrix P(k,l) = L(perm[k], perm[l]) has exact zeros in every block
// strictly above the diagonal and every diagonal block, after removing the
// incoming-weight diagonal, is the Laplacian of a strongly connected graph.

inline Matrix permute_matrix(const Matrix& L, const std::vector<Index>& perm) {
  const Index n = L.rows();
  Matrix out(n, n);
  for (Index k = 0; k < n; ++k) {
    for (Index l = 0; l < n; ++l) {
      out(k, l) = L(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(l)]);
    }
  }
  return out;
}

inline bool oracle_is_valid_cascade_form(const Matrix& L, const std::vector<Index>& perm,
                                         const std::vector<Index>& sizes) {
  const Index n = L.rows();
  Index total = 0;
  for (Index s : sizes) total += s;
  if (total != n || sizes.empty()) return false;
  const Matrix P = permute_matrix(L, perm);

  Index off = 0;
  for (std::size_t b = 0; b < sizes.size(); ++b) {
    const Index nb = sizes[b];
    // exact zeros right of the diagonal block
    for (Index k = off; k < off + nb; ++k) {
      for (Index l = off + nb; l < n; ++l) {
        if (P(k, l) != 0.0) return false;
      }
    }
    // diagonal block minus incoming weights must be strongly connected
    Matrix Lb = P.block(off, off, nb, nb);
    for (Index k = 0; k < nb; ++k) {
      double incoming = 0.0;
      for (Index l = 0; l < off; ++l) incoming += -P(off + k, l);
      Lb(k, k) -= incoming;
    }
    if (!oracle_matrix_strongly_connected(Lb)) return false;
    off += nb;
  }
  return true;
}

/// All ordered compositions of n into positive parts.
inline std::vector<std::vector<Index>> compositions(Index n) {
  std::vector<std::vector<Index>> result;
  const std::uint64_t masks = n >= 1 ? (1ull << (n - 1)) : 0;
  for (std::uint64_t mask = 0; mask < masks; ++mask) {
    std::vector<Index> parts;
    Index run = 1;
    for (Index cut = 0; cut < n - 1; ++cut) {
      if (mask & (1ull << cut)) {
        parts.push_back(run);
        run = 1;
      } else {
        ++run;
      }
    }
    parts.push_back(run);
    result.push_back(std::move(parts));
  }
  return result;
}

struct CascadeForm {
  std::vector<Index> perm;
  std::vector<Index> sizes;
};

/// Number of diagonal blocks receiving no weight from earlier blocks. For a
/// valid form this equals the number of root components of the condensation;
/// it is 1 exactly when the graph has a directed spanning tree.
inline Index oracle_root_block_count(const Matrix& L, const CascadeForm& form) {
  const Matrix P = permute_matrix(L, form.perm);
  Index roots = 0;
  Index off = 0;
  for (Index nb : form.sizes) {
    double incoming = 0.0;
    for (Index k = off; k < off + nb; ++k) {
      for (Index l = 0; l < off; ++l) incoming += -P(k, l);
    }
    if (incoming == 0.0) ++roots;
    off += nb;
  }
  return roots;
}

/// Root SCC count straight from pairwise reachability.
inline Index oracle_root_scc_count(const Digraph& g) {
  const auto sets = oracle_scc_sets(g);
  Index roots = 0;
  for (const auto& comp : sets) {
    bool incoming = false;
    for (const auto& e : g.edges()) {
      const bool to_inside = std::find(comp.begin(), comp.end(), e.to) != comp.end();
      const bool from_inside = std::find(comp.begin(), comp.end(), e.from) != comp.end();
      if (to_inside && !from_inside && e.weight != 0.0) incoming = true;
    }
    if (!incoming) ++roots;
  }
  return roots;
}

/// Every valid (perm, sizes) pair by exhaustion; feasible up to n ~ 6.
inline std::vector<CascadeForm> oracle_all_cascade_forms(const Matrix& L) {
  const Index n = L.rows();
  std::vector<CascadeForm> valid;
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  const auto comps = compositions(n);
  do {
    for (const auto& sizes : comps) {
      if (oracle_is_valid_cascade_form(L, perm, sizes)) valid.push_back({perm, sizes});
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return valid;
}

// ---------------------------------------------------------------------------
// Closed-form solutions

/// Solution of xdot = x - x^3: x(t)^2 follows a logistic curve.
inline double cubic_closed_form(double x0, double t) {
  if (x0 == 0.0) return 0.0;
  const double y0 = x0 * x0;
  const double e = std::exp(2.0 * t);
  const double y = y0 * e / (1.0 + y0 * (e - 1.0));
  return (x0 > 0 ? 1.0 : -1.0) * std::sqrt(y);
}

}  // namespace testsupport
