#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "tim/coloring.hpp"
#include "tim/graph.hpp"
#include "tim/linalg.hpp"
#include "tim/rational.hpp"

namespace tim {

/// Per-node beamforming assignment: b column indices (0-based) into a family.
struct VectorAssignment {
  VectorFamily family;
  std::vector<std::vector<int>> columns;  // per node
  int b = 1;

  void validate(int num_nodes) const {
    if (static_cast<int>(columns.size()) != num_nodes)
      throw std::invalid_argument("VectorAssignment: node count mismatch");
    for (const auto& idx : columns) {
      if (static_cast<int>(idx.size()) != b)
        throw std::invalid_argument("VectorAssignment: node not assigned exactly b columns");
      for (int k : idx)
        if (k < 0 || k >= static_cast<int>(family.vectors.size()))
          throw std::invalid_argument("VectorAssignment: column index out of range");
    }
  }
};

inline bool check_coloring(const ConflictGraph& g, const Coloring& c) {
  if (static_cast<int>(c.colors.size()) != g.num_nodes)
    throw std::invalid_argument("check_coloring: coloring not total");
  return is_proper_coloring(g, c.colors);
}

struct LocalColoringCheck {
  bool ok = false;
  std::vector<int> closed_color_counts;  // |c(N_c+(i))| per node
};

/// (K,r)-local condition: proper coloring whose closed in-neighborhoods each
/// show at most r distinct colors.
inline LocalColoringCheck check_local_coloring(const ConflictGraph& g, const Coloring& c,
                                               int K, int r) {
  if (static_cast<int>(c.colors.size()) != g.num_nodes)
    throw std::invalid_argument("check_local_coloring: coloring not total");
  for (int v = 0; v < g.num_nodes; ++v)
    if (c.colors[v] < 1 || c.colors[v] > K)
      throw std::invalid_argument("check_local_coloring: color out of [1,K]");
  if (!is_proper_coloring(g, c.colors))
    throw std::invalid_argument("check_local_coloring: base coloring invalid");
  Neighborhoods nb(g);
  LocalColoringCheck out;
  out.closed_color_counts.resize(g.num_nodes);
  out.ok = true;
  for (int i = 0; i < g.num_nodes; ++i) {
    std::set<int> seen{c.colors[i]};
    for (int j : nb.in[i]) seen.insert(c.colors[j]);
    out.closed_color_counts[i] = static_cast<int>(seen.size());
    if (out.closed_color_counts[i] > r) out.ok = false;
  }
  return out;
}

/// (K,r,b)-fractional-local condition: size-b color sets, adjacent sets
/// disjoint, closed in-neighborhood unions of size at most r.
inline bool check_fractional_local_coloring(const ConflictGraph& g,
                                            const std::vector<std::vector<int>>& fc,
                                            int K, int r, int b) {
  if (static_cast<int>(fc.size()) != g.num_nodes)
    throw std::invalid_argument("check_fractional_local_coloring: assignment not total");
  for (const auto& set : fc) {
    if (static_cast<int>(set.size()) != b)
      throw std::invalid_argument("check_fractional_local_coloring: set size != b");
    std::set<int> uniq(set.begin(), set.end());
    if (static_cast<int>(uniq.size()) != b)
      throw std::invalid_argument("check_fractional_local_coloring: duplicate colors in a set");
    for (int c : set)
      if (c < 1 || c > K)
        throw std::invalid_argument("check_fractional_local_coloring: color out of [1,K]");
  }
  Neighborhoods nb(g);
  for (const auto& [u, v] : nb.undirected_edges) {
    for (int c : fc[u])
      if (std::find(fc[v].begin(), fc[v].end(), c) != fc[v].end()) return false;
  }
  for (int i = 0; i < g.num_nodes; ++i) {
    std::set<int> uni(fc[i].begin(), fc[i].end());
    for (int j : nb.in[i]) uni.insert(fc[j].begin(), fc[j].end());
    if (static_cast<int>(uni.size()) > r) return false;
  }
  return true;
}

namespace detail {

/// Stack the assigned vectors of `nodes` as matrix rows.
inline ExactMatrix stack_rows(const VectorAssignment& va, const std::vector<int>& nodes) {
  ExactMatrix m;
  m.cols = va.family.dim;
  for (int v : nodes)
    for (int k : va.columns[v]) m.append_row(va.family.vectors[k]);
  return m;
}

}  // namespace detail

/// Exact (r_N(i), r_cN(i)): ranks of the stacked columns over the open and
/// closed in-neighborhoods.
inline std::pair<int, int> neighborhood_ranks(const ConflictGraph& g,
                                              const VectorAssignment& va, int i) {
  va.validate(g.num_nodes);
  const Neighborhood nb = closed_in_neighborhood(g, i);
  const int r_n = rank_exact(detail::stack_rows(va, nb.open_in));
  const int r_cn = rank_exact(detail::stack_rows(va, nb.closed_in));
  return {r_n, r_cn};
}

/// Eq.-(5) condition: every node gains exactly b fresh dimensions over its
/// in-neighborhood, and no closed stack exceeds rank r.
inline bool check_matrix_rank_reduction(const ConflictGraph& g, const VectorAssignment& va,
                                        int r, int b) {
  va.validate(g.num_nodes);
  for (int i = 0; i < g.num_nodes; ++i) {
    const auto [r_n, r_cn] = neighborhood_ranks(g, va, i);
    if (r_cn - r_n != b) return false;
    if (r_cn > r) return false;
  }
  return true;
}

inline int max_closed_rank(const ConflictGraph& g, const VectorAssignment& va) {
  int x = 0;
  for (int i = 0; i < g.num_nodes; ++i) x = std::max(x, neighborhood_ranks(g, va, i).second);
  return x;
}

/// Receiver-side decodability: at every destination the desired beamformer
/// adds exactly b dimensions on top of the stacked interference.
inline bool check_decodability(const TopologyInstance& topo,
                               const std::vector<ExactMatrix>& beamformers) {
  topo.validate();
  const int n = static_cast<int>(topo.demands.size());
  if (static_cast<int>(beamformers.size()) != n)
    throw std::invalid_argument("check_decodability: one beamformer per demand required");
  if (n == 0) return true;
  const int x = beamformers[0].cols;
  const int b = beamformers[0].rows;
  for (const auto& m : beamformers)
    if (m.cols != x || m.rows != b)
      throw std::invalid_argument("check_decodability: beamformer dimension mismatch");
  for (int j = 0; j < n; ++j) {
    const int dest = topo.demands[j].second;
    ExactMatrix interference;
    interference.cols = x;
    for (int e = 0; e < n; ++e) {
      if (e == j) continue;
      if (!topo.has_link(topo.demands[e].first, dest)) continue;
      for (int rr = 0; rr < beamformers[e].rows; ++rr) {
        std::vector<std::int64_t> row(x);
        for (int cc = 0; cc < x; ++cc) row[cc] = beamformers[e].at(rr, cc);
        interference.append_row(row);
      }
    }
    const int rank_i = rank_exact(interference);
    for (int rr = 0; rr < b; ++rr) {
      std::vector<std::int64_t> row(x);
      for (int cc = 0; cc < x; ++cc) row[cc] = beamformers[j].at(rr, cc);
      interference.append_row(row);
    }
    if (rank_exact(interference) - rank_i != b) return false;
  }
  return true;
}

enum class SchemeMode { TDMA, OSIA, OVIA, SSIA, SVIA };

inline std::string scheme_mode_name(SchemeMode m) {
  switch (m) {
    case SchemeMode::TDMA: return "TDMA";
    case SchemeMode::OSIA: return "OSIA";
    case SchemeMode::OVIA: return "OVIA";
    case SchemeMode::SSIA: return "SSIA";
    case SchemeMode::SVIA: return "SVIA";
  }
  throw std::logic_error("scheme_mode_name: bad mode");
}

inline SchemeMode scheme_mode_from_name(const std::string& s) {
  if (s == "TDMA") return SchemeMode::TDMA;
  if (s == "OSIA") return SchemeMode::OSIA;
  if (s == "OVIA") return SchemeMode::OVIA;
  if (s == "SSIA") return SchemeMode::SSIA;
  if (s == "SVIA") return SchemeMode::SVIA;
  throw std::invalid_argument("unknown scheme mode: " + s);
}

/// Certified IA solution. assignment[i] holds 0-based indices into
/// family.vectors; d_sym is exact and equals b/x for the stored mode.
struct Scheme {
  SchemeMode mode = SchemeMode::TDMA;
  int K = 0, r = 0, b = 1, x = 0;
  std::vector<std::vector<int>> assignment;
  VectorFamily family;
  Rational d_sym{0, 1};
  bool certified = false;
};

inline Rational dof(const Scheme& s) {
  if (!s.certified) throw std::logic_error("dof: scheme not certified");
  switch (s.mode) {
    case SchemeMode::TDMA: return Rational(1, s.K);
    case SchemeMode::OSIA: return Rational(1, s.r);
    case SchemeMode::OVIA: return Rational(s.b, s.r);
    case SchemeMode::SSIA:
    case SchemeMode::SVIA: return Rational(s.b, s.x);
  }
  throw std::logic_error("dof: bad mode");
}

/// Re-derives every condition for the scheme's mode from scratch, including
/// receiver decodability on the given (or canonically realized) topology.
/// Returns false instead of throwing on malformed content.
inline bool certify_scheme(const ConflictGraph& g, Scheme& s,
                           const TopologyInstance* topo = nullptr) {
  s.certified = false;
  try {
    const int n = g.num_nodes;
    if (static_cast<int>(s.assignment.size()) != n) return false;
    VectorAssignment va{s.family, s.assignment, s.b};
    va.validate(n);

    const TopologyInstance canon = topo ? *topo : topology_from_conflict_graph(g);
    if (static_cast<int>(canon.demands.size()) != n) return false;
    std::vector<ExactMatrix> beams(n);
    for (int i = 0; i < n; ++i) {
      beams[i].cols = s.family.dim;
      for (int k : s.assignment[i]) beams[i].append_row(s.family.vectors[k]);
    }

    switch (s.mode) {
      case SchemeMode::TDMA: {
        if (s.b != 1 || s.x != s.K || s.r != s.K) return false;
        Coloring c;
        c.num_colors = s.K;
        for (int i = 0; i < n; ++i) c.colors.push_back(s.assignment[i][0] + 1);
        for (int col : c.colors)
          if (col < 1 || col > s.K) return false;
        if (!check_coloring(g, c)) return false;
        if (s.d_sym != Rational(1, s.K)) return false;
        break;
      }
      case SchemeMode::OSIA: {
        if (s.b != 1 || s.x != s.r) return false;
        Coloring c;
        c.num_colors = s.K;
        for (int i = 0; i < n; ++i) c.colors.push_back(s.assignment[i][0] + 1);
        const auto local = check_local_coloring(g, c, s.K, s.r);
        if (!local.ok) return false;
        if (s.d_sym != Rational(1, s.r)) return false;
        break;
      }
      case SchemeMode::OVIA: {
        if (s.x != s.r) return false;
        std::vector<std::vector<int>> fc(n);
        for (int i = 0; i < n; ++i)
          for (int k : s.assignment[i]) fc[i].push_back(k + 1);
        if (!check_fractional_local_coloring(g, fc, s.K, s.r, s.b)) return false;
        if (s.d_sym != Rational(s.b, s.r)) return false;
        break;
      }
      case SchemeMode::SSIA:
      case SchemeMode::SVIA: {
        if (!check_matrix_rank_reduction(g, va, s.r, s.b)) return false;
        if (s.x != max_closed_rank(g, va)) return false;
        if (s.d_sym != Rational(s.b, s.x)) return false;
        break;
      }
    }
    if (!check_decodability(canon, beams)) return false;
    s.certified = true;
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace tim
