#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <vector>

#include "tim/graph.hpp"
#include "tim/rng.hpp"

namespace tim {

/// Complete vertex coloring with 1-based colors; num_colors is the palette
/// size K, which may exceed the number of colors actually used.
struct Coloring {
  std::vector<int> colors;
  int num_colors = 0;
};

/// Proper on the underlying undirected graph.
inline bool is_proper_coloring(const ConflictGraph& g, const std::vector<int>& colors) {
  if (static_cast<int>(colors.size()) != g.num_nodes) return false;
  for (const auto& [u, v] : g.edges)
    if (colors[u] == colors[v]) return false;
  return true;
}

inline int max_color_used(const std::vector<int>& colors) {
  int k = 0;
  for (int c : colors) k = std::max(k, c);
  return k;
}

/// Smallest-last greedy with two-color Kempe-chain interchange. Before a new
/// color is opened, the interchange tries to free an existing one by swapping
/// the two-color components around the blocked vertex.
inline Coloring greedy_sli(const ConflictGraph& g) {
  const int n = g.num_nodes;
  Neighborhoods nb(g);
  // smallest-last order: repeatedly remove a min-degree vertex, lowest index on ties
  std::vector<int> degree(n), order;
  std::vector<bool> removed(n, false);
  for (int v = 0; v < n; ++v) degree[v] = static_cast<int>(nb.undirected[v].size());
  for (int step = 0; step < n; ++step) {
    int best = -1;
    for (int v = 0; v < n; ++v)
      if (!removed[v] && (best < 0 || degree[v] < degree[best])) best = v;
    removed[best] = true;
    order.push_back(best);
    for (int u : nb.undirected[best])
      if (!removed[u]) --degree[u];
  }
  std::reverse(order.begin(), order.end());

  std::vector<int> colors(n, 0);
  int k = 0;
  auto try_interchange = [&](int v) -> bool {
    // Swap colors a/b inside the {a,b}-components holding v's a-colored
    // neighbors; legal iff no chain reaches a b-colored neighbor of v.
    for (int a = 1; a <= k; ++a) {
      for (int b = 1; b <= k; ++b) {
        if (a == b) continue;
        std::vector<int> stack, comp;
        std::vector<bool> seen(n, false);
        for (int u : nb.undirected[v])
          if (colors[u] == a && !seen[u]) {
            seen[u] = true;
            stack.push_back(u);
          }
        bool blocked = false;
        while (!stack.empty() && !blocked) {
          const int u = stack.back();
          stack.pop_back();
          comp.push_back(u);
          for (int w : nb.undirected[u]) {
            if (colors[w] != a && colors[w] != b) continue;
            if (!seen[w]) {
              seen[w] = true;
              stack.push_back(w);
            }
          }
        }
        for (int u : nb.undirected[v])
          if (colors[u] == b && seen[u]) blocked = true;
        if (blocked) continue;
        for (int u : comp) colors[u] = colors[u] == a ? b : a;
        colors[v] = a;
        return true;
      }
    }
    return false;
  };

  for (int v : order) {
    std::vector<bool> used(k + 2, false);
    for (int u : nb.undirected[v])
      if (colors[u] > 0 && colors[u] <= k) used[colors[u]] = true;
    int c = 1;
    while (c <= k && used[c]) ++c;
    if (c <= k) {
      colors[v] = c;
      continue;
    }
    if (k >= 2 && try_interchange(v)) continue;
    k = c;
    colors[v] = c;
  }
  return Coloring{colors, k};
}

/// TabuCol with fixed tenure and aspiration. Search state is a complete
/// assignment; a move recolors one endpoint of a conflicting edge.
inline std::optional<Coloring> tabucol(const ConflictGraph& g, int k, int max_iters,
                                       int tenure, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("tabucol: k must be >= 1");
  const int n = g.num_nodes;
  Neighborhoods nb(g);
  Rng rng(seed);

  std::vector<int> colors(n);
  for (int v = 0; v < n; ++v) colors[v] = 1 + static_cast<int>(rng.below(k));

  // gamma[v][c-1]: number of v's neighbors currently colored c
  std::vector<std::vector<int>> gamma(n, std::vector<int>(k, 0));
  for (const auto& [u, v] : nb.undirected_edges) {
    ++gamma[u][colors[v] - 1];
    ++gamma[v][colors[u] - 1];
  }
  auto total_conflicts = [&]() {
    int t = 0;
    for (const auto& [u, v] : nb.undirected_edges)
      if (colors[u] == colors[v]) ++t;
    return t;
  };
  int conflicts = total_conflicts();
  int best_seen = conflicts;
  std::vector<std::vector<int>> tabu_until(n, std::vector<int>(k, -1));

  for (int iter = 0; iter < max_iters && conflicts > 0; ++iter) {
    int best_delta = INT32_MAX;
    std::vector<std::pair<int, int>> best_moves;
    for (int v = 0; v < n; ++v) {
      if (gamma[v][colors[v] - 1] == 0) continue;  // not on a conflicting edge
      for (int c = 1; c <= k; ++c) {
        if (c == colors[v]) continue;
        const int delta = gamma[v][c - 1] - gamma[v][colors[v] - 1];
        const bool is_tabu = tabu_until[v][c - 1] >= iter;
        const bool aspirated = conflicts + delta < best_seen;
        if (is_tabu && !aspirated) continue;
        if (delta < best_delta) {
          best_delta = delta;
          best_moves.clear();
        }
        if (delta == best_delta) best_moves.push_back({v, c});
      }
    }
    if (best_moves.empty()) continue;
    const auto [v, c] = best_moves[rng.below(best_moves.size())];
    const int old = colors[v];
    colors[v] = c;
    conflicts += best_delta;
    for (int u : nb.undirected[v]) {
      --gamma[u][old - 1];
      ++gamma[u][c - 1];
    }
    tabu_until[v][old - 1] = iter + tenure;
    best_seen = std::min(best_seen, conflicts);
  }
  if (conflicts > 0) return std::nullopt;
  return Coloring{colors, k};
}

/// Exact chromatic number result. When exact is false the search ran out of
/// budget and only the [chi_lower, chi_upper] interval is proven.
struct ChromaticResult {
  int chi_lower = 0;
  int chi_upper = 0;
  bool exact = false;
  Coloring witness;
  int chi() const {
    if (!exact) throw std::logic_error("ChromaticResult: interval only, budget exhausted");
    return chi_upper;
  }
};

/// DSATUR-ordered branch and bound with a greedy-clique lower bound and the
/// smallest-last greedy as upper bound. Ties broken by lowest node index.
inline ChromaticResult exact_chromatic(const ConflictGraph& g,
                                       std::int64_t budget = 50'000'000) {
  const int n = g.num_nodes;
  ChromaticResult result;
  if (n == 0) {
    result.chi_lower = result.chi_upper = 0;
    result.exact = true;
    result.witness.num_colors = 0;
    return result;
  }
  Neighborhoods nb(g);

  // greedy clique on degree-descending order
  std::vector<int> by_degree(n);
  for (int v = 0; v < n; ++v) by_degree[v] = v;
  std::sort(by_degree.begin(), by_degree.end(), [&](int a, int b) {
    const auto da = nb.undirected[a].size(), db = nb.undirected[b].size();
    return da != db ? da > db : a < b;
  });
  std::vector<int> clique;
  for (int v : by_degree) {
    bool ok = true;
    for (int u : clique)
      if (!std::binary_search(nb.undirected[v].begin(), nb.undirected[v].end(), u)) {
        ok = false;
        break;
      }
    if (ok) clique.push_back(v);
  }
  const int lb = static_cast<int>(clique.size());

  Coloring greedy = greedy_sli(g);
  int best_k = greedy.num_colors;
  Coloring best = greedy;

  std::vector<int> colors(n, 0);
  std::int64_t expansions = 0;
  bool exhausted = false;

  auto dsatur_pick = [&]() {
    int pick = -1, pick_sat = -1;
    for (int v = 0; v < n; ++v) {
      if (colors[v] != 0) continue;
      std::vector<bool> seen(n + 2, false);
      int sat = 0;
      for (int u : nb.undirected[v])
        if (colors[u] != 0 && !seen[colors[u]]) {
          seen[colors[u]] = true;
          ++sat;
        }
      if (sat > pick_sat) {
        pick_sat = sat;
        pick = v;
      }
    }
    return pick;
  };

  auto rec = [&](auto&& self, int colored_count, int used) -> void {
    if (best_k <= lb || exhausted) return;
    if (colored_count == n) {
      if (used < best_k) {
        best_k = used;
        best.colors = colors;
        best.num_colors = used;
      }
      return;
    }
    if (++expansions > budget) {
      exhausted = true;
      return;
    }
    const int v = dsatur_pick();
    std::vector<bool> blocked(used + 2, false);
    for (int u : nb.undirected[v])
      if (colors[u] != 0 && colors[u] <= used + 1) blocked[colors[u]] = true;
    for (int c = 1; c <= std::min(used + 1, best_k - 1); ++c) {
      if (blocked[c]) continue;
      colors[v] = c;
      self(self, colored_count + 1, std::max(used, c));
      colors[v] = 0;
      if (best_k <= lb || exhausted) return;
    }
  };
  rec(rec, 0, 0);

  result.chi_lower = exhausted ? lb : best_k;
  result.chi_upper = best_k;
  result.exact = !exhausted || lb == best_k;
  if (result.exact) result.chi_lower = best_k;
  result.witness = best;
  return result;
}

}  // namespace tim
