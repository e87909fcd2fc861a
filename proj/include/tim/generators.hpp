#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tim/coloring.hpp"
#include "tim/graph.hpp"
#include "tim/rng.hpp"

namespace tim {

enum class GraphFamily { ER, PA, HH, GEO, BA, WirelessNet };

inline std::string family_name(GraphFamily f) {
  switch (f) {
    case GraphFamily::ER: return "er";
    case GraphFamily::PA: return "pa";
    case GraphFamily::HH: return "hh";
    case GraphFamily::GEO: return "geo";
    case GraphFamily::BA: return "ba";
    case GraphFamily::WirelessNet: return "wireless";
  }
  throw std::logic_error("family_name: bad family");
}

inline GraphFamily family_from_name(const std::string& s) {
  if (s == "er") return GraphFamily::ER;
  if (s == "pa") return GraphFamily::PA;
  if (s == "hh") return GraphFamily::HH;
  if (s == "geo") return GraphFamily::GEO;
  if (s == "ba") return GraphFamily::BA;
  if (s == "wireless") return GraphFamily::WirelessNet;
  throw std::invalid_argument("unknown graph family: " + s);
}

struct WirelessConfig {
  double area_side = 1000.0;
  double link_distance_min = 2.0;
  double link_distance_max = 65.0;
  double pathloss_exponent = 3.5;
  double breakpoint_distance = 72.0;
  enum class ThresholdMode { topological_density, channel_percentile };
  ThresholdMode threshold_mode = ThresholdMode::topological_density;
  double threshold_value = 0.4;

  void validate() const {
    if (area_side <= 0 || link_distance_min <= 0 || link_distance_max < link_distance_min ||
        pathloss_exponent <= 0 || breakpoint_distance <= 0)
      throw std::invalid_argument("WirelessConfig: ranges must be positive");
    if (threshold_value <= 0 || threshold_value > 1)
      throw std::invalid_argument("WirelessConfig: threshold_value must be in (0,1]");
  }
};

struct GenSpec {
  GraphFamily family = GraphFamily::ER;
  int num_sources = 0;       // node count for GEO/BA
  int num_destinations = 0;  // ignored for GEO/BA
  std::map<std::string, double> params;
  double q = 0.2;
  std::uint64_t seed = 0;

  double param(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end()) throw std::invalid_argument("GenSpec: missing parameter " + name);
    return it->second;
  }
  double param_or(const std::string& name, double fallback) const {
    auto it = params.find(name);
    return it == params.end() ? fallback : it->second;
  }
};

struct GenResult {
  ConflictGraph graph;
  std::optional<TopologyInstance> topology;
};

namespace detail {

/// Demanded pairs: a uniformly random maximal matching within ceil(q*M*N)
/// candidate links drawn without replacement from the link set. q scales
/// with the full message grid, so no links means no demands.
inline void select_demands(TopologyInstance& t, double q, Rng& rng) {
  if (q < 0 || q > 1) throw std::invalid_argument("select_demands: q must be in [0,1]");
  t.canonicalize();
  const std::size_t total = t.links.size();
  const double grid =
      static_cast<double>(t.num_sources) * static_cast<double>(t.num_destinations);
  const auto want = std::min(total, static_cast<std::size_t>(std::ceil(q * grid)));
  if (want == 0) return;
  const auto pool = rng.sample(static_cast<std::uint64_t>(total), want);
  std::vector<char> src_used(t.num_sources, 0), dst_used(t.num_destinations, 0);
  for (std::uint64_t idx : pool) {
    const auto [s, d] = t.links[idx];
    if (src_used[s] || dst_used[d]) continue;
    src_used[s] = dst_used[d] = 1;
    t.demands.emplace_back(s, d);
  }
  t.canonicalize();
}

inline double pathloss_db(double d, const WirelessConfig& cfg) {
  constexpr double kNearLimit = 0.1;
  constexpr double kLosExponent = 2.0;
  d = std::max(d, kNearLimit);
  if (d <= cfg.breakpoint_distance) return 10.0 * kLosExponent * std::log10(d);
  return 10.0 * kLosExponent * std::log10(cfg.breakpoint_distance) +
         10.0 * cfg.pathloss_exponent * std::log10(d / cfg.breakpoint_distance);
}

}  // namespace detail

inline TopologyInstance erdos_topology(int M, int N, double p, double q, Rng& rng) {
  if (M <= 0 || N <= 0) throw std::invalid_argument("erdos_topology: sizes must be positive");
  if (p < 0 || p > 1) throw std::invalid_argument("erdos_topology: p must be in [0,1]");
  TopologyInstance t;
  t.num_sources = M;
  t.num_destinations = N;
  for (int s = 0; s < M; ++s)
    for (int d = 0; d < N; ++d)
      if (rng.bernoulli(p)) t.links.emplace_back(s, d);
  detail::select_demands(t, q, rng);
  t.validate();
  return t;
}

/// Bipartite preferential attachment: top degrees uniform in [1, maxdeg];
/// each stub opens a new bottom node with probability p_new (while fewer
/// than N exist) and otherwise attaches proportionally to bottom degree.
inline TopologyInstance preferential_attachment_topology(int M, int N, int maxdeg, double p_new,
                                                         double q, Rng& rng) {
  if (M <= 0 || N <= 0 || maxdeg < 1)
    throw std::invalid_argument("preferential_attachment_topology: bad sizes");
  if (p_new < 0 || p_new > 1)
    throw std::invalid_argument("preferential_attachment_topology: p_new must be in [0,1]");
  TopologyInstance t;
  t.num_sources = M;
  t.num_destinations = N;
  int bottoms = 0;
  std::vector<int> weighted;  // bottom index repeated once per attached stub
  for (int top = 0; top < M; ++top) {
    const int deg = static_cast<int>(rng.range(1, maxdeg));
    for (int stub = 0; stub < deg; ++stub) {
      int bottom;
      if ((bottoms == 0 || rng.bernoulli(p_new)) && bottoms < N) {
        bottom = bottoms++;
      } else {
        bottom = weighted[rng.below(weighted.size())];
      }
      weighted.push_back(bottom);
      t.links.emplace_back(top, bottom);
    }
  }
  detail::select_demands(t, q, rng);
  t.validate();
  return t;
}

/// Bipartite degree-sequence graph: both sides drawn uniform in [1, maxdeg],
/// redrawn until the sums match and the greedy largest-first construction
/// realizes the sequence.
inline TopologyInstance havel_hakimi_topology(int M, int N, int maxdeg, double q, Rng& rng) {
  if (M <= 0 || N <= 0 || maxdeg < 1 || maxdeg > std::min(M, N))
    throw std::invalid_argument("havel_hakimi_topology: bad sizes");
  constexpr int kMaxAttempts = 100000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::vector<int> top(M), bot(N);
    long sum_top = 0, sum_bot = 0;
    for (int& d : top) sum_top += d = static_cast<int>(rng.range(1, maxdeg));
    for (int& d : bot) sum_bot += d = static_cast<int>(rng.range(1, maxdeg));
    if (sum_top != sum_bot) continue;

    TopologyInstance t;
    t.num_sources = M;
    t.num_destinations = N;
    std::vector<int> top_order(M);
    for (int i = 0; i < M; ++i) top_order[i] = i;
    std::sort(top_order.begin(), top_order.end(),
              [&](int a, int b) { return top[a] != top[b] ? top[a] > top[b] : a < b; });
    bool ok = true;
    for (int s : top_order) {
      std::vector<int> bot_order(N);
      for (int j = 0; j < N; ++j) bot_order[j] = j;
      std::sort(bot_order.begin(), bot_order.end(),
                [&](int a, int b) { return bot[a] != bot[b] ? bot[a] > bot[b] : a < b; });
      if (top[s] > N || bot[bot_order[std::max(0, top[s] - 1)]] == 0) {
        ok = top[s] == 0;
        if (!ok) break;
      }
      for (int k = 0; k < top[s]; ++k) {
        const int d = bot_order[k];
        if (bot[d] == 0) {
          ok = false;
          break;
        }
        --bot[d];
        t.links.emplace_back(s, d);
      }
      if (!ok) break;
      top[s] = 0;
    }
    if (!ok) continue;

    detail::select_demands(t, q, rng);
    t.validate();
    return t;
  }
  throw std::runtime_error("havel_hakimi_topology: no graphical sequence found");
}

/// Random geometric conflict graph on the unit square; nodes within the
/// distance threshold conflict in both directions.
inline ConflictGraph geometric_graph(int n, double threshold, Rng& rng) {
  if (n <= 0 || threshold <= 0) throw std::invalid_argument("geometric_graph: bad parameters");
  std::vector<std::pair<double, double>> pts(n);
  for (auto& [x, y] : pts) {
    x = rng.unit();
    y = rng.unit();
  }
  ConflictGraph g;
  g.num_nodes = n;
  const double t2 = threshold * threshold;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double dx = pts[i].first - pts[j].first, dy = pts[i].second - pts[j].second;
      if (dx * dx + dy * dy <= t2) {
        g.edges.emplace_back(i, j);
        g.edges.emplace_back(j, i);
      }
    }
  g.canonicalize();
  g.validate();
  return g;
}

/// Barabasi-Albert conflict graph: m initial isolated nodes, every later node
/// attaches to m distinct degree-weighted targets; edges in both directions.
inline ConflictGraph barabasi_albert_graph(int n, int m, Rng& rng) {
  if (m < 1 || n <= m) throw std::invalid_argument("barabasi_albert_graph: need 1 <= m < n");
  ConflictGraph g;
  g.num_nodes = n;
  std::vector<int> repeated;
  std::vector<int> targets(m);
  for (int i = 0; i < m; ++i) targets[i] = i;
  for (int src = m; src < n; ++src) {
    for (int tgt : targets) {
      g.edges.emplace_back(src, tgt);
      g.edges.emplace_back(tgt, src);
      repeated.push_back(tgt);
      repeated.push_back(src);
    }
    if (src + 1 == n) break;
    std::vector<int> next;
    std::vector<char> chosen(n, 0);
    while (static_cast<int>(next.size()) < m) {
      const int cand = repeated[rng.below(repeated.size())];
      if (chosen[cand]) continue;
      chosen[cand] = 1;
      next.push_back(cand);
    }
    targets = std::move(next);
  }
  g.canonicalize();
  g.validate();
  return g;
}

/// n_pairs transceiver pairs in a square area, all-unicast demands.
/// Cross links survive by path-loss-proxy strength: the strongest
/// round(value*n*(n-1)) in density mode, or those strictly above the
/// value-quantile in percentile mode.
inline TopologyInstance wireless_topology(int n_pairs, const WirelessConfig& cfg, Rng& rng) {
  if (n_pairs <= 0) throw std::invalid_argument("wireless_topology: n_pairs must be positive");
  cfg.validate();
  std::vector<std::pair<double, double>> tx(n_pairs), rx(n_pairs);
  for (int i = 0; i < n_pairs; ++i) {
    tx[i] = {rng.unit() * cfg.area_side, rng.unit() * cfg.area_side};
    const double dist = cfg.link_distance_min +
                        rng.unit() * (cfg.link_distance_max - cfg.link_distance_min);
    constexpr int kMaxPlacementTries = 10000;
    bool placed = false;
    for (int tries = 0; tries < kMaxPlacementTries && !placed; ++tries) {
      const double ang = rng.unit() * 2.0 * 3.14159265358979323846;
      const double x = tx[i].first + dist * std::cos(ang);
      const double y = tx[i].second + dist * std::sin(ang);
      if (x >= 0 && x <= cfg.area_side && y >= 0 && y <= cfg.area_side) {
        rx[i] = {x, y};
        placed = true;
      }
    }
    if (!placed) throw std::runtime_error("wireless_topology: receiver placement failed");
  }

  struct Cross {
    double strength;
    int s, d;
  };
  std::vector<Cross> cross;
  cross.reserve(static_cast<std::size_t>(n_pairs) * (n_pairs - 1));
  for (int i = 0; i < n_pairs; ++i)
    for (int j = 0; j < n_pairs; ++j) {
      if (i == j) continue;
      const double dx = tx[i].first - rx[j].first, dy = tx[i].second - rx[j].second;
      const double dist = std::sqrt(dx * dx + dy * dy);
      cross.push_back({-detail::pathloss_db(dist, cfg), i, j});
    }

  TopologyInstance t;
  t.num_sources = n_pairs;
  t.num_destinations = n_pairs;
  for (int i = 0; i < n_pairs; ++i) {
    t.demands.emplace_back(i, i);
    t.links.emplace_back(i, i);
  }
  if (cfg.threshold_mode == WirelessConfig::ThresholdMode::topological_density) {
    const auto target = static_cast<std::size_t>(
        std::llround(cfg.threshold_value * n_pairs * (n_pairs - 1)));
    if (target > cross.size())
      throw std::runtime_error("wireless_topology: density target exceeds available links");
    std::sort(cross.begin(), cross.end(), [](const Cross& a, const Cross& b) {
      return std::tie(b.strength, a.s, a.d) < std::tie(a.strength, b.s, b.d);
    });
    for (std::size_t k = 0; k < target; ++k) t.links.emplace_back(cross[k].s, cross[k].d);
  } else if (!cross.empty()) {
    std::vector<double> strengths;
    strengths.reserve(cross.size());
    for (const auto& c : cross) strengths.push_back(c.strength);
    std::sort(strengths.begin(), strengths.end());
    const auto idx = static_cast<std::size_t>(
        std::llround(cfg.threshold_value * static_cast<double>(strengths.size() - 1)));
    const double cut = strengths[std::min(idx, strengths.size() - 1)];
    for (const auto& c : cross)
      if (c.strength > cut) t.links.emplace_back(c.s, c.d);
  }
  t.canonicalize();
  t.validate();
  return t;
}

inline GenResult generate(const GenSpec& spec) {
  Rng rng(spec.seed);
  GenResult out;
  switch (spec.family) {
    case GraphFamily::ER: {
      auto t = erdos_topology(spec.num_sources, spec.num_destinations, spec.param("p"), spec.q,
                              rng);
      out.graph = build_conflict_graph(t);
      out.topology = std::move(t);
      break;
    }
    case GraphFamily::PA: {
      auto t = preferential_attachment_topology(
          spec.num_sources, spec.num_destinations, static_cast<int>(spec.param("maxdeg")),
          spec.param("p_new"), spec.q, rng);
      out.graph = build_conflict_graph(t);
      out.topology = std::move(t);
      break;
    }
    case GraphFamily::HH: {
      auto t = havel_hakimi_topology(spec.num_sources, spec.num_destinations,
                                     static_cast<int>(spec.param("maxdeg")), spec.q, rng);
      out.graph = build_conflict_graph(t);
      out.topology = std::move(t);
      break;
    }
    case GraphFamily::GEO:
      out.graph = geometric_graph(spec.num_sources, spec.param("threshold"), rng);
      break;
    case GraphFamily::BA:
      out.graph = barabasi_albert_graph(spec.num_sources, static_cast<int>(spec.param("m")), rng);
      break;
    case GraphFamily::WirelessNet: {
      WirelessConfig cfg;
      cfg.threshold_mode = spec.param_or("percentile", 0) > 0
                               ? WirelessConfig::ThresholdMode::channel_percentile
                               : WirelessConfig::ThresholdMode::topological_density;
      cfg.threshold_value = spec.param("threshold");
      cfg.area_side = spec.param_or("area", cfg.area_side);
      cfg.pathloss_exponent = spec.param_or("exponent", cfg.pathloss_exponent);
      cfg.breakpoint_distance = spec.param_or("breakpoint", cfg.breakpoint_distance);
      auto t = wireless_topology(spec.num_sources, cfg, rng);
      out.graph = build_conflict_graph(t);
      out.topology = std::move(t);
      break;
    }
  }
  return out;
}

struct LabelOutcome {
  bool labeled = false;
  int chi = 0;
  int chi_lower = 0, chi_upper = 0;
};

inline LabelOutcome label_instance(const ConflictGraph& g, long budget = 50'000'000) {
  const ChromaticResult res = exact_chromatic(g, budget);
  LabelOutcome out;
  out.chi_lower = res.chi_lower;
  out.chi_upper = res.chi_upper;
  if (res.exact) {
    out.labeled = true;
    out.chi = res.chi_lower;
  }
  return out;
}

}  // namespace tim
