#pragma once

#include <tim/graph.hpp>

/// Small hand-built instances shared by the unit suite and the acceptance
/// gate.
namespace fixtures {

/// Five unicast pairs plus three interfering links: sources 0 and 2 also
/// reach destination 3, source 3 also reaches destination 4. The conflict
/// graph has edges 0->3, 2->3, 3->4 only.
inline tim::TopologyInstance aligned_pair_topology() {
  tim::TopologyInstance t;
  t.num_sources = 5;
  t.num_destinations = 5;
  for (int i = 0; i < 5; ++i) {
    t.links.emplace_back(i, i);
    t.demands.emplace_back(i, i);
  }
  t.links.emplace_back(0, 3);
  t.links.emplace_back(2, 3);
  t.links.emplace_back(3, 4);
  t.canonicalize();
  t.validate();
  return t;
}

/// Directed triangle whose members all point into a fourth sink node. The
/// underlying undirected graph is K4.
inline tim::ConflictGraph cycle_with_sink() {
  tim::ConflictGraph g;
  g.num_nodes = 4;
  g.edges = {{0, 1}, {1, 2}, {2, 0}, {0, 3}, {1, 3}, {2, 3}};
  g.canonicalize();
  g.validate();
  return g;
}

/// Tournament orientation of K4 with every in-degree at most two.
inline tim::ConflictGraph tournament4() {
  tim::ConflictGraph g;
  g.num_nodes = 4;
  g.edges = {{0, 1}, {0, 2}, {1, 2}, {3, 0}, {3, 1}, {2, 3}};
  g.canonicalize();
  g.validate();
  return g;
}

inline tim::ConflictGraph directed_triangle() {
  tim::ConflictGraph g;
  g.num_nodes = 3;
  g.edges = {{0, 1}, {1, 2}, {2, 0}};
  g.canonicalize();
  g.validate();
  return g;
}

inline tim::ConflictGraph undirected_cycle(int n) {
  tim::ConflictGraph g;
  g.num_nodes = n;
  for (int i = 0; i < n; ++i) {
    g.edges.emplace_back(i, (i + 1) % n);
    g.edges.emplace_back((i + 1) % n, i);
  }
  g.canonicalize();
  g.validate();
  return g;
}

inline tim::ConflictGraph complete_graph(int n) {
  tim::ConflictGraph g;
  g.num_nodes = n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) g.edges.emplace_back(i, j);
  g.canonicalize();
  g.validate();
  return g;
}

inline tim::ConflictGraph edgeless(int n) {
  tim::ConflictGraph g;
  g.num_nodes = n;
  return g;
}

}  // namespace fixtures
