#pragma once

// Strongly connected components (Tarjan), condensation, and the
// spanning-tree test. Components are emitted in a canonical order, sorted by
// their smallest contained node index, so results do not depend on edge
// input order.

#include "cascade/graph.hpp"
#include "cascade/types.hpp"

#include <algorithm>
#include <set>
#include <utility>
#include <vector>

namespace cascade {

struct SccPartition {
  /// Node sets partitioning [0, N); each sorted ascending, components sorted
  /// by smallest contained node.
  std::vector<std::vector<Index>> components;
  /// Deduplicated (u, v) pairs: some edge carries information from a node of
  /// component u to a node of component v. Acyclic by construction.
  std::vector<std::pair<Index, Index>> condensation_edges;

  Index component_of(Index node) const {
    for (Index c = 0; c < static_cast<Index>(components.size()); ++c) {
      const auto& comp = components[static_cast<std::size_t>(c)];
      if (std::binary_search(comp.begin(), comp.end(), node)) return c;
    }
    return -1;
  }
};

namespace detail {

struct TarjanState {
  const std::vector<std::vector<Index>>& adj;
  std::vector<Index> index, lowlink, stack;
  std::vector<bool> on_stack;
  std::vector<Index> component;  // node -> raw component id
  Index next_index = 0, component_count = 0;

  explicit TarjanState(const std::vector<std::vector<Index>>& a)
      : adj(a),
        index(a.size(), -1),
        lowlink(a.size(), 0),
        on_stack(a.size(), false),
        component(a.size(), -1) {}

  void visit(Index v) {
    index[v] = lowlink[v] = next_index++;
    stack.push_back(v);
    on_stack[v] = true;
    for (Index w : adj[static_cast<std::size_t>(v)]) {
      if (index[w] < 0) {
        visit(w);
        lowlink[v] = std::min(lowlink[v], lowlink[w]);
      } else if (on_stack[w]) {
        lowlink[v] = std::min(lowlink[v], index[w]);
      }
    }
    if (lowlink[v] == index[v]) {
      Index w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        component[w] = component_count;
      } while (w != v);
      ++component_count;
    }
  }
};

}  // namespace detail

template <typename Scalar>
SccPartition strongly_connected_components(const DirectedGraph<Scalar>& g) {
  const auto adj = g.flow_adjacency();
  detail::TarjanState tarjan(adj);
  for (Index v = 0; v < g.node_count(); ++v) {
    if (tarjan.index[v] < 0) tarjan.visit(v);
  }

  std::vector<std::vector<Index>> raw(static_cast<std::size_t>(tarjan.component_count));
  for (Index v = 0; v < g.node_count(); ++v) {
    raw[static_cast<std::size_t>(tarjan.component[v])].push_back(v);
  }
  // Node ids were assigned ascending, so each raw component is already
  // sorted; canonical component order is by smallest contained node.
  std::sort(raw.begin(), raw.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });

  SccPartition part;
  part.components = std::move(raw);

  std::vector<Index> comp_of(static_cast<std::size_t>(g.node_count()));
  for (Index c = 0; c < static_cast<Index>(part.components.size()); ++c) {
    for (Index v : part.components[static_cast<std::size_t>(c)]) {
      comp_of[static_cast<std::size_t>(v)] = c;
    }
  }
  std::set<std::pair<Index, Index>> edges;
  for (const auto& e : g.edges()) {
    const Index cu = comp_of[static_cast<std::size_t>(e.from)];
    const Index cv = comp_of[static_cast<std::size_t>(e.to)];
    if (cu != cv) edges.insert({cu, cv});
  }
  part.condensation_edges.assign(edges.begin(), edges.end());
  return part;
}

/// Number of condensation components with no incoming condensation edge.
inline Index root_component_count(const SccPartition& part) {
  std::vector<bool> has_incoming(part.components.size(), false);
  for (const auto& [u, v] : part.condensation_edges) {
    (void)u;
    has_incoming[static_cast<std::size_t>(v)] = true;
  }
  Index roots = 0;
  for (bool b : has_incoming) roots += b ? 0 : 1;
  return roots;
}

/// True iff some node reaches all others along information flow, i.e. the
/// condensation has exactly one root component.
template <typename Scalar>
bool has_spanning_tree(const DirectedGraph<Scalar>& g) {
  return root_component_count(strongly_connected_components(g)) == 1;
}

}  // namespace cascade
