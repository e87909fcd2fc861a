#pragma once

#include <algorithm>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "tim/coloring.hpp"
#include "tim/env.hpp"
#include "tim/graph.hpp"
#include "tim/linalg.hpp"
#include "tim/policy.hpp"
#include "tim/rng.hpp"
#include "tim/verify.hpp"

namespace tim {

struct EpisodeResult {
  bool success = false;
  int steps = 0;
  double total_reward = 0.0;
  std::vector<int> final_state;
};

inline EpisodeResult run_episode(DeferralEnv& env, const PolicyFn& policy, Rng& rng) {
  env.reset();
  EpisodeResult out;
  while (!env.done()) {
    const Observation obs = env.observe();
    const std::vector<int> action = policy(env, obs, rng);
    const StepResult sr = env.step(action);
    out.total_reward += sr.reward;
  }
  out.success = env.success();
  out.steps = env.t();
  out.final_state = env.state();
  return out;
}

/// Exhaustive (K,r)-local coloring search with interchangeable-color symmetry
/// breaking. Returns colors in 1..K or nullopt.
inline std::optional<std::vector<int>> exact_local_coloring(const ConflictGraph& g, int K,
                                                            int r) {
  if (K < 1 || r < 1 || r > K) throw std::invalid_argument("exact_local_coloring: bad K or r");
  const int n = g.num_nodes;
  if (n == 0) return std::vector<int>{};
  Neighborhoods nb(g);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto da = nb.undirected[a].size(), db = nb.undirected[b].size();
    return da != db ? da > db : a < b;
  });
  std::vector<int> colors(n, 0);

  auto closed_ok = [&](int i) {
    std::set<int> seen;
    if (colors[i]) seen.insert(colors[i]);
    for (int j : nb.in[i])
      if (colors[j]) seen.insert(colors[j]);
    return static_cast<int>(seen.size()) <= r;
  };
  std::function<bool(int, int)> dfs = [&](int pos, int used) {
    if (pos == n) return true;
    const int v = order[pos];
    const int limit = std::min(K, used + 1);
    for (int c = 1; c <= limit; ++c) {
      bool proper = true;
      for (int j : nb.undirected[v])
        if (colors[j] == c) {
          proper = false;
          break;
        }
      if (!proper) continue;
      colors[v] = c;
      bool local = closed_ok(v);
      for (int j : nb.out[v]) {
        if (!local) break;
        local = closed_ok(j);
      }
      if (local && dfs(pos + 1, std::max(used, c))) return true;
      colors[v] = 0;
    }
    return false;
  };
  if (!dfs(0, 0)) return std::nullopt;
  return colors;
}

inline std::optional<std::vector<int>> exact_k_coloring(const ConflictGraph& g, int K) {
  return exact_local_coloring(g, K, K);
}

/// Smallest r with max closed in-neighborhood color count at most r, over all
/// proper colorings with any palette size. Exponential; small graphs only.
inline int brute_local_chromatic(const ConflictGraph& g) {
  const int n = g.num_nodes;
  if (n == 0) return 0;
  for (int r = 1; r <= n; ++r)
    for (int K = r; K <= n; ++K)
      if (exact_local_coloring(g, K, r).has_value()) return r;
  throw std::logic_error("brute_local_chromatic: unreachable");
}

/// Exhaustive placeholder-vector assignment for the rank-gain condition with
/// b=1: every node's vector must stay independent of its assigned
/// in-neighborhood, pruned on partial spans.
inline std::optional<std::vector<int>> exact_matrix_assignment(const ConflictGraph& g, int r) {
  if (r < 1 || r > 16) throw std::invalid_argument("exact_matrix_assignment: bad r");
  const int n = g.num_nodes;
  if (n == 0) return std::vector<int>{};
  const VectorFamily fam = binary_vectors(r);
  const int A = static_cast<int>(fam.vectors.size());
  Neighborhoods nb(g);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto da = nb.undirected[a].size(), db = nb.undirected[b].size();
    return da != db ? da > db : a < b;
  });
  std::vector<int> values(n, 0);

  auto independent = [&](int i) {
    if (values[i] == 0) return true;
    ExactMatrix m;
    m.cols = fam.dim;
    for (int j : nb.in[i])
      if (values[j]) m.append_row(fam.vectors[values[j] - 1]);
    const int base = rank_exact(m);
    m.append_row(fam.vectors[values[i] - 1]);
    return rank_exact(m) - base == 1;
  };
  std::function<bool(int)> dfs = [&](int pos) {
    if (pos == n) return true;
    const int v = order[pos];
    for (int k = 1; k <= A; ++k) {
      values[v] = k;
      bool ok = independent(v);
      for (int j : nb.out[v]) {
        if (!ok) break;
        ok = independent(j);
      }
      if (ok && dfs(pos + 1)) return true;
      values[v] = 0;
    }
    return false;
  };
  if (!dfs(0)) return std::nullopt;
  return values;
}

namespace detail {

/// Relabels colors order-preservingly onto 1..K_used.
inline std::vector<int> compact_colors(const std::vector<int>& colors, int* k_out) {
  std::vector<int> distinct(colors);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<int> out(colors.size());
  for (std::size_t i = 0; i < colors.size(); ++i) {
    const auto it = std::lower_bound(distinct.begin(), distinct.end(), colors[i]);
    out[i] = static_cast<int>(it - distinct.begin()) + 1;
  }
  if (k_out) *k_out = static_cast<int>(distinct.size());
  return out;
}

inline int max_closed_color_count(const ConflictGraph& g, const std::vector<int>& colors) {
  Neighborhoods nb(g);
  int worst = 0;
  for (int i = 0; i < g.num_nodes; ++i) {
    std::set<int> seen{colors[i]};
    for (int j : nb.in[i]) seen.insert(colors[j]);
    worst = std::max(worst, static_cast<int>(seen.size()));
  }
  return worst;
}

}  // namespace detail

inline Scheme tdma_scheme(const ConflictGraph& g, const std::vector<int>& colors,
                          const TopologyInstance* topo = nullptr) {
  Scheme s;
  s.mode = SchemeMode::TDMA;
  std::vector<int> compact = detail::compact_colors(colors, &s.K);
  s.r = s.x = s.K;
  s.b = 1;
  s.family.kind = VectorFamily::Kind::binary_enumeration;
  s.family.dim = s.K;
  for (int c = 0; c < s.K; ++c) {
    std::vector<std::int64_t> unit(s.K, 0);
    unit[c] = 1;
    s.family.vectors.push_back(std::move(unit));
  }
  for (int c : compact) s.assignment.push_back({c - 1});
  s.d_sym = Rational(1, s.K);
  certify_scheme(g, s, topo);
  return s;
}

inline Scheme osia_scheme(const ConflictGraph& g, const std::vector<int>& colors,
                          const TopologyInstance* topo = nullptr) {
  Scheme s;
  s.mode = SchemeMode::OSIA;
  std::vector<int> compact = detail::compact_colors(colors, &s.K);
  s.r = s.x = detail::max_closed_color_count(g, compact);
  s.b = 1;
  s.family = mds_family(s.K, s.r, smallest_prime_at_least(std::max(s.K, 2)));
  for (int c : compact) s.assignment.push_back({c - 1});
  s.d_sym = Rational(1, s.r);
  certify_scheme(g, s, topo);
  return s;
}

inline Scheme ovia_scheme(const ConflictGraph& g, const std::vector<std::vector<int>>& sets,
                          int b, const TopologyInstance* topo = nullptr) {
  Scheme s;
  s.mode = SchemeMode::OVIA;
  s.b = b;
  int K = 0;
  for (const auto& set : sets)
    for (int c : set) K = std::max(K, c);
  s.K = K;
  Neighborhoods nb(g);
  int worst = 0;
  for (int i = 0; i < g.num_nodes; ++i) {
    std::set<int> uni(sets[i].begin(), sets[i].end());
    for (int j : nb.in[i]) uni.insert(sets[j].begin(), sets[j].end());
    worst = std::max(worst, static_cast<int>(uni.size()));
  }
  s.r = s.x = worst;
  s.family = mds_family(s.K, s.r, smallest_prime_at_least(std::max(s.K, 2)));
  for (const auto& set : sets) {
    std::vector<int> idx;
    for (int c : set) idx.push_back(c - 1);
    std::sort(idx.begin(), idx.end());
    s.assignment.push_back(std::move(idx));
  }
  s.d_sym = Rational(s.b, s.r);
  certify_scheme(g, s, topo);
  return s;
}

inline Scheme ssia_scheme(const ConflictGraph& g, const std::vector<int>& values, int r,
                          const TopologyInstance* topo = nullptr) {
  Scheme s;
  s.mode = SchemeMode::SSIA;
  s.b = 1;
  s.r = r;
  s.family = binary_vectors(r);
  for (int v : values) s.assignment.push_back({v - 1});
  s.x = max_closed_rank(g, VectorAssignment{s.family, s.assignment, 1});
  s.K = static_cast<int>(s.family.vectors.size());
  s.d_sym = Rational(1, s.x);
  certify_scheme(g, s, topo);
  return s;
}

/// Converts a local-coloring witness into a rank-gain scheme by reusing its
/// MDS columns as placeholder vectors.
inline Scheme ssia_scheme_from_coloring(const ConflictGraph& g, const std::vector<int>& colors,
                                        const TopologyInstance* topo = nullptr) {
  Scheme s;
  s.mode = SchemeMode::SSIA;
  s.b = 1;
  int K = 0;
  std::vector<int> compact = detail::compact_colors(colors, &K);
  s.K = K;
  s.r = detail::max_closed_color_count(g, compact);
  s.family = mds_family(K, s.r, smallest_prime_at_least(std::max(K, 2)));
  for (int c : compact) s.assignment.push_back({c - 1});
  s.x = max_closed_rank(g, VectorAssignment{s.family, s.assignment, 1});
  s.d_sym = Rational(1, s.x);
  certify_scheme(g, s, topo);
  return s;
}

inline Scheme svia_scheme(const ConflictGraph& g, int b, const std::vector<int>& split_values,
                          int r, const TopologyInstance* topo = nullptr) {
  if (b < 1) throw std::invalid_argument("svia_scheme: b must be positive");
  Scheme s;
  s.mode = SchemeMode::SVIA;
  s.b = b;
  s.r = r;
  s.family = binary_vectors(r);
  if (static_cast<int>(split_values.size()) != g.num_nodes * b)
    throw std::invalid_argument("svia_scheme: split assignment size mismatch");
  for (int v = 0; v < g.num_nodes; ++v) {
    std::vector<int> idx;
    for (int j = 0; j < b; ++j) idx.push_back(split_values[v * b + j] - 1);
    std::sort(idx.begin(), idx.end());
    s.assignment.push_back(std::move(idx));
  }
  s.x = max_closed_rank(g, VectorAssignment{s.family, s.assignment, b});
  s.K = static_cast<int>(s.family.vectors.size());
  s.d_sym = Rational(b, s.x);
  certify_scheme(g, s, topo);
  return s;
}

inline PolicyFn make_exact_coloring_policy() {
  return [](const DeferralEnv& env, const Observation& obs, Rng&) {
    std::vector<int> action(env.graph().num_nodes, -1);
    const auto sol = exact_k_coloring(env.graph(), env.config().K);
    for (int i : obs.nodes) action[i] = sol ? (*sol)[i] : 0;
    return action;
  };
}

inline PolicyFn make_exact_local_policy() {
  return [](const DeferralEnv& env, const Observation& obs, Rng&) {
    std::vector<int> action(env.graph().num_nodes, -1);
    const auto sol = exact_local_coloring(env.graph(), env.config().K, env.config().r);
    for (int i : obs.nodes) action[i] = sol ? (*sol)[i] : 0;
    return action;
  };
}

inline PolicyFn make_exact_matrix_policy() {
  return [](const DeferralEnv& env, const Observation& obs, Rng&) {
    std::vector<int> action(env.graph().num_nodes, -1);
    const auto sol = exact_matrix_assignment(env.graph(), env.config().r);
    for (int i : obs.nodes) action[i] = sol ? (*sol)[i] : 0;
    return action;
  };
}

/// Exhaustive stand-in usable across selector phases: dispatches on the
/// environment's mode and solves it outright or defers forever.
inline PolicyFn make_exact_policy() {
  return [](const DeferralEnv& env, const Observation& obs, Rng& rng) {
    switch (env.config().mode) {
      case EnvMode::coloring: return make_exact_coloring_policy()(env, obs, rng);
      case EnvMode::local_coloring: return make_exact_local_policy()(env, obs, rng);
      case EnvMode::matrix_rank_reduction: return make_exact_matrix_policy()(env, obs, rng);
    }
    throw std::logic_error("make_exact_policy: bad mode");
  };
}

struct SelectorResult {
  std::vector<int> colors;  // witness at the selected K (and r in local mode)
  int K = 0;
  int r = 0;  // achieved closed color bound of the witness
  int episodes = 0;
  bool used_fallback = false;  // greedy witness at the initial K
};

/// Palette descent: initialize K from the greedy bound, run policy episodes at
/// K-1, K-2, ... and keep the smallest completed palette; in local mode an
/// inner descent then minimizes the verified closed color bound r at that K.
inline SelectorResult k_selector(const ConflictGraph& g, EnvMode mode, const PolicyFn& policy,
                                 EnvConfig base, int episodes_per_setting,
                                 std::uint64_t seed) {
  if (g.num_nodes == 0) throw std::invalid_argument("k_selector: empty graph");
  if (mode == EnvMode::matrix_rank_reduction)
    throw std::invalid_argument("k_selector: coloring modes only");
  if (episodes_per_setting < 1)
    throw std::invalid_argument("k_selector: episodes_per_setting must be positive");

  SelectorResult out;
  const Coloring greedy = greedy_sli(g);
  out.colors = greedy.colors;
  out.K = greedy.num_colors;
  out.used_fallback = true;

  auto try_setting = [&](EnvConfig cfg, int index_base) -> std::optional<std::vector<int>> {
    DeferralEnv env(g, cfg);
    for (int e = 0; e < episodes_per_setting; ++e) {
      Rng rng(derive_seed(seed, seed_purpose::kSelector,
                          static_cast<std::uint64_t>(index_base) + e));
      const EpisodeResult res = run_episode(env, policy, rng);
      ++out.episodes;
      if (res.success) return res.final_state;
    }
    return std::nullopt;
  };

  for (int K = out.K - 1; K >= 1; --K) {
    EnvConfig cfg = base;
    cfg.mode = EnvMode::coloring;
    cfg.K = K;
    cfg.r = 0;
    const auto witness = try_setting(cfg, K * episodes_per_setting);
    if (!witness) break;
    out.colors = *witness;
    out.K = K;
    out.used_fallback = false;
  }
  out.colors = detail::compact_colors(out.colors, &out.K);
  out.r = detail::max_closed_color_count(g, out.colors);

  if (mode == EnvMode::local_coloring) {
    int r = out.r - 1;
    while (r >= 1) {
      EnvConfig cfg = base;
      cfg.mode = EnvMode::local_coloring;
      cfg.K = out.K;
      cfg.r = r;
      const auto witness = try_setting(cfg, 1000000 + r * episodes_per_setting);
      if (!witness) break;
      Coloring c;
      c.colors = *witness;
      c.num_colors = out.K;
      if (!check_local_coloring(g, c, out.K, r).ok) break;
      out.colors = *witness;
      out.r = detail::max_closed_color_count(g, out.colors);
      r = out.r - 1;
    }
  }
  return out;
}

struct SolveOutcome {
  Scheme scheme;
  bool success = false;
  int episodes = 0;
};

inline SolveOutcome solve_coloring(const ConflictGraph& g, const PolicyFn& policy,
                                   EnvConfig base, int episodes_per_setting, std::uint64_t seed,
                                   const TopologyInstance* topo = nullptr) {
  const SelectorResult sel =
      k_selector(g, EnvMode::coloring, policy, base, episodes_per_setting, seed);
  SolveOutcome out;
  out.scheme = tdma_scheme(g, sel.colors, topo);
  out.success = out.scheme.certified;
  out.episodes = sel.episodes;
  return out;
}

inline SolveOutcome solve_osia(const ConflictGraph& g, const PolicyFn& policy, EnvConfig base,
                               int episodes_per_setting, std::uint64_t seed,
                               const TopologyInstance* topo = nullptr) {
  const SelectorResult sel =
      k_selector(g, EnvMode::local_coloring, policy, base, episodes_per_setting, seed);
  SolveOutcome out;
  out.scheme = osia_scheme(g, sel.colors, topo);
  out.success = out.scheme.certified;
  out.episodes = sel.episodes;
  return out;
}

/// Fractional pipeline: local coloring on the b-order split graph, merged
/// back; never returns less than the b-fold replication of the scalar scheme.
inline SolveOutcome solve_ovia(const ConflictGraph& g, int b, const PolicyFn& policy,
                               EnvConfig base, int episodes_per_setting, std::uint64_t seed,
                               const TopologyInstance* topo = nullptr) {
  if (b < 1) throw std::invalid_argument("solve_ovia: b must be positive");
  const SolveOutcome scalar = solve_osia(g, policy, base, episodes_per_setting, seed);
  SolveOutcome out;
  out.episodes = scalar.episodes;

  std::optional<Scheme> best;
  if (scalar.success) {
    std::vector<std::vector<int>> sets;
    for (const auto& idx : scalar.scheme.assignment) {
      std::vector<int> set;
      for (int j = 0; j < b; ++j) set.push_back(idx[0] * b + j + 1);
      sets.push_back(std::move(set));
    }
    Scheme repl = ovia_scheme(g, sets, b, topo);
    if (repl.certified) best = std::move(repl);
  }

  const ConflictGraph split = node_splitting_graph(g, b);
  const SelectorResult sel = k_selector(split, EnvMode::local_coloring, policy, base,
                                        episodes_per_setting,
                                        derive_seed(seed, seed_purpose::kSelector, 1));
  out.episodes += sel.episodes;
  const auto sets = merge_split_coloring(g, b, sel.colors);
  Scheme searched = ovia_scheme(g, sets, b, topo);
  if (searched.certified && (!best || searched.d_sym > best->d_sym)) best = std::move(searched);

  if (best) {
    out.scheme = std::move(*best);
    out.success = true;
  }
  return out;
}

/// Rank-gain pipeline at placeholder dimension r; a converted local-coloring
/// scheme seeds the search so the result never falls below the scalar one.
inline SolveOutcome solve_ssia(const ConflictGraph& g, int r, const PolicyFn& policy,
                               EnvConfig base, int episodes_per_setting, std::uint64_t seed,
                               const TopologyInstance* topo = nullptr) {
  SolveOutcome out;
  std::optional<Scheme> best;

  const SolveOutcome scalar = solve_osia(g, policy, base, episodes_per_setting, seed);
  out.episodes = scalar.episodes;
  if (scalar.success && scalar.scheme.r <= r) {
    std::vector<int> colors;
    for (const auto& idx : scalar.scheme.assignment) colors.push_back(idx[0] + 1);
    Scheme conv = ssia_scheme_from_coloring(g, colors, topo);
    if (conv.certified) best = std::move(conv);
  }

  EnvConfig cfg = base;
  cfg.mode = EnvMode::matrix_rank_reduction;
  cfg.K = 0;
  cfg.r = r;
  DeferralEnv env(g, cfg);
  for (int e = 0; e < episodes_per_setting; ++e) {
    Rng rng(derive_seed(seed, seed_purpose::kEpisode, e));
    const EpisodeResult res = run_episode(env, policy, rng);
    ++out.episodes;
    if (!res.success) continue;
    Scheme cand = ssia_scheme(g, res.final_state, r, topo);
    if (cand.certified && (!best || cand.d_sym > best->d_sym)) best = std::move(cand);
  }

  if (best) {
    out.scheme = std::move(*best);
    out.success = true;
  }
  return out;
}

/// Vector rank-gain pipeline: rank-gain search on the b-order split graph,
/// merged back to b vectors per node.
inline SolveOutcome solve_svia(const ConflictGraph& g, int b, int r, const PolicyFn& policy,
                               EnvConfig base, int episodes_per_setting, std::uint64_t seed,
                               const TopologyInstance* topo = nullptr) {
  if (b < 1) throw std::invalid_argument("solve_svia: b must be positive");
  const ConflictGraph split = node_splitting_graph(g, b);
  SolveOutcome out;
  std::optional<Scheme> best;
  EnvConfig cfg = base;
  cfg.mode = EnvMode::matrix_rank_reduction;
  cfg.K = 0;
  cfg.r = r;
  DeferralEnv env(split, cfg);
  for (int e = 0; e < episodes_per_setting; ++e) {
    Rng rng(derive_seed(seed, seed_purpose::kEpisode, e));
    const EpisodeResult res = run_episode(env, policy, rng);
    ++out.episodes;
    if (!res.success) continue;
    Scheme cand = svia_scheme(g, b, res.final_state, r, topo);
    if (cand.certified && (!best || cand.d_sym > best->d_sym)) best = std::move(cand);
  }
  if (best) {
    out.scheme = std::move(*best);
    out.success = true;
  }
  return out;
}

struct BestOfN {
  bool success = false;
  int successes = 0;
  int best_steps = 0;
  std::vector<int> best_state;
};

/// n independently seeded episodes; the best is the successful one with the
/// fewest steps (first such on ties).
inline BestOfN evaluate_best_of_n(const ConflictGraph& g, const PolicyFn& policy,
                                  const EnvConfig& cfg, int n, std::uint64_t seed) {
  DeferralEnv env(g, cfg);
  BestOfN out;
  for (int e = 0; e < n; ++e) {
    Rng rng(derive_seed(seed, seed_purpose::kEval, e));
    const EpisodeResult res = run_episode(env, policy, rng);
    if (!res.success) continue;
    ++out.successes;
    if (!out.success || res.steps < out.best_steps) {
      out.success = true;
      out.best_steps = res.steps;
      out.best_state = res.final_state;
    }
  }
  return out;
}

}  // namespace tim
