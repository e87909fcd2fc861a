#pragma once

#include <algorithm>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

namespace tim {

using IndexPair = std::pair<int, int>;

/// Partially connected bipartite network: link matrix entries plus the
/// demanded source-destination matching.
struct TopologyInstance {
  int num_sources = 0;
  int num_destinations = 0;
  std::vector<IndexPair> links;    // (source, destination), kept sorted unique
  std::vector<IndexPair> demands;  // matching, every demand also a link

  void canonicalize() {
    std::sort(links.begin(), links.end());
    links.erase(std::unique(links.begin(), links.end()), links.end());
    std::sort(demands.begin(), demands.end());
    demands.erase(std::unique(demands.begin(), demands.end()), demands.end());
  }

  void validate() const {
    std::set<IndexPair> link_set(links.begin(), links.end());
    std::set<int> used_sources, used_destinations;
    for (const auto& [s, d] : links) {
      if (s < 0 || s >= num_sources || d < 0 || d >= num_destinations)
        throw std::invalid_argument("TopologyInstance: link index out of range");
    }
    for (const auto& [s, d] : demands) {
      if (!link_set.count({s, d}))
        throw std::invalid_argument("TopologyInstance: demand is not a link");
      if (!used_sources.insert(s).second || !used_destinations.insert(d).second)
        throw std::invalid_argument("TopologyInstance: demands are not a matching");
    }
  }

  bool has_link(int s, int d) const {
    return std::binary_search(links.begin(), links.end(), IndexPair{s, d});
  }
};

/// Directed graph over demanded messages: edge u -> v iff u's source
/// interferes v's destination. The universal solver input.
struct ConflictGraph {
  int num_nodes = 0;
  std::vector<IndexPair> edges;            // ordered pairs, sorted unique, no self-loops
  std::vector<IndexPair> node_labels;      // node -> (source, destination); empty if untracked

  void canonicalize() {
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  }

  void validate() const {
    for (const auto& [u, v] : edges) {
      if (u < 0 || u >= num_nodes || v < 0 || v >= num_nodes)
        throw std::invalid_argument("ConflictGraph: edge index out of range");
      if (u == v) throw std::invalid_argument("ConflictGraph: self-loop");
    }
  }

  bool has_edge(int u, int v) const {
    return std::binary_search(edges.begin(), edges.end(), IndexPair{u, v});
  }
};

struct Neighborhood {
  std::vector<int> open_in;    // N+(i), sorted
  std::vector<int> closed_in;  // N+(i) with i itself, sorted
};

/// All adjacency views of a ConflictGraph, built once and shared read-only.
struct Neighborhoods {
  std::vector<std::vector<int>> in;         // in-neighbors, sorted
  std::vector<std::vector<int>> out;        // out-neighbors, sorted
  std::vector<std::vector<int>> undirected; // neighbors under either direction, sorted unique
  std::vector<IndexPair> undirected_edges;  // each unordered adjacency once, (min,max)

  explicit Neighborhoods(const ConflictGraph& g)
      : in(g.num_nodes), out(g.num_nodes), undirected(g.num_nodes) {
    std::set<IndexPair> und;
    for (const auto& [u, v] : g.edges) {
      out[u].push_back(v);
      in[v].push_back(u);
      und.insert({std::min(u, v), std::max(u, v)});
    }
    for (auto& nb : in) std::sort(nb.begin(), nb.end());
    for (auto& nb : out) std::sort(nb.begin(), nb.end());
    for (const auto& [u, v] : und) {
      undirected[u].push_back(v);
      undirected[v].push_back(u);
      undirected_edges.push_back({u, v});
    }
    for (auto& nb : undirected) std::sort(nb.begin(), nb.end());
  }
};

/// One node per demand; edge a -> b, a != b, exactly when source(a) links to
/// destination(b). With an empty demand set the result is the empty graph and
/// *empty_warning (when given) is set.
inline ConflictGraph build_conflict_graph(const TopologyInstance& topo,
                                          bool* empty_warning = nullptr) {
  topo.validate();
  ConflictGraph g;
  g.num_nodes = static_cast<int>(topo.demands.size());
  g.node_labels = topo.demands;
  if (empty_warning) *empty_warning = topo.demands.empty();
  for (int a = 0; a < g.num_nodes; ++a) {
    for (int b = 0; b < g.num_nodes; ++b) {
      if (a == b) continue;
      if (topo.has_link(topo.demands[a].first, topo.demands[b].second))
        g.edges.push_back({a, b});
    }
  }
  g.canonicalize();
  return g;
}

inline Neighborhood closed_in_neighborhood(const ConflictGraph& g, int i) {
  if (i < 0 || i >= g.num_nodes)
    throw std::out_of_range("closed_in_neighborhood: node out of range");
  Neighborhood nb;
  for (const auto& [u, v] : g.edges)
    if (v == i) nb.open_in.push_back(u);
  std::sort(nb.open_in.begin(), nb.open_in.end());
  nb.open_in.erase(std::unique(nb.open_in.begin(), nb.open_in.end()), nb.open_in.end());
  nb.closed_in = nb.open_in;
  nb.closed_in.insert(std::lower_bound(nb.closed_in.begin(), nb.closed_in.end(), i), i);
  return nb;
}

/// Any conflict graph is realizable as an all-unicast topology: demand k is
/// (source k, destination k) and edge (u, v) becomes cross link (u, v).
/// Lets topology-level decodability checks run on directly generated graphs.
inline TopologyInstance topology_from_conflict_graph(const ConflictGraph& g) {
  TopologyInstance topo;
  topo.num_sources = g.num_nodes;
  topo.num_destinations = g.num_nodes;
  for (int k = 0; k < g.num_nodes; ++k) {
    topo.links.push_back({k, k});
    topo.demands.push_back({k, k});
  }
  for (const auto& [u, v] : g.edges) topo.links.push_back({u, v});
  topo.canonicalize();
  return topo;
}

/// Def.-4 splitting: b copies per node in a contiguous block (copy j of node v
/// is v*b + j), all b^2 cross edges per original edge, and the b copies of each
/// node fully connected in both directions.
inline ConflictGraph node_splitting_graph(const ConflictGraph& g, int b) {
  if (b < 1) throw std::invalid_argument("node_splitting_graph: b must be >= 1");
  ConflictGraph out;
  out.num_nodes = g.num_nodes * b;
  for (const auto& [u, v] : g.edges)
    for (int i = 0; i < b; ++i)
      for (int j = 0; j < b; ++j)
        out.edges.push_back({u * b + i, v * b + j});
  for (int v = 0; v < g.num_nodes; ++v)
    for (int i = 0; i < b; ++i)
      for (int j = 0; j < b; ++j)
        if (i != j) out.edges.push_back({v * b + i, v * b + j});
  out.canonicalize();
  return out;
}

/// Inverse of the split layout: node v collects the colors of its b copies.
/// The internal clique forces the b colors apart, so each set has size b.
inline std::vector<std::vector<int>> merge_split_coloring(
    const ConflictGraph& g, int b, const std::vector<int>& split_coloring) {
  if (b < 1) throw std::invalid_argument("merge_split_coloring: b must be >= 1");
  if (static_cast<int>(split_coloring.size()) != g.num_nodes * b)
    throw std::invalid_argument("merge_split_coloring: coloring size mismatch");
  std::vector<std::vector<int>> merged(g.num_nodes);
  for (int v = 0; v < g.num_nodes; ++v) {
    std::set<int> colors;
    for (int j = 0; j < b; ++j) colors.insert(split_coloring[v * b + j]);
    if (static_cast<int>(colors.size()) != b)
      throw std::invalid_argument("merge_split_coloring: split copies share a color");
    merged[v].assign(colors.begin(), colors.end());
  }
  return merged;
}

}  // namespace tim
