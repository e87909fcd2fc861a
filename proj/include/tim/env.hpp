#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <vector>

#include "tim/graph.hpp"
#include "tim/linalg.hpp"

namespace tim {

enum class EnvMode { coloring, local_coloring, matrix_rank_reduction };

struct EnvConfig {
  EnvMode mode = EnvMode::coloring;
  int K = 0;  // palette size (coloring and local modes)
  int r = 0;  // locality bound, or placeholder dimension in matrix mode
  int B = 32;
  double alpha = 0.5;
  double beta = 0.5;

  int alphabet() const {
    return mode == EnvMode::matrix_rank_reduction ? (1 << r) - 1 : K;
  }
  void validate() const {
    if (B < 1) throw std::invalid_argument("EnvConfig: B must be positive");
    if (alpha < 0 || alpha > 1) throw std::invalid_argument("EnvConfig: alpha must be in [0,1]");
    if (beta < 0) throw std::invalid_argument("EnvConfig: beta must be nonnegative");
    if (mode == EnvMode::matrix_rank_reduction) {
      if (r < 1 || r > 16) throw std::invalid_argument("EnvConfig: r must be in [1,16]");
    } else {
      if (K < 1) throw std::invalid_argument("EnvConfig: K must be positive");
      if (mode == EnvMode::local_coloring && (r < 1 || r > K))
        throw std::invalid_argument("EnvConfig: r must be in [1,K]");
    }
  }
};

/// r_t is unscaled; the episode reward is r_c + beta * r_t.
struct RewardComponents {
  double r_c = 0.0;
  double r_t = 0.0;
  double total(double beta) const { return r_c + beta * r_t; }
};

inline RewardComponents reward_components(const std::vector<int>& state,
                                          const std::vector<int>& next_state, int t_after,
                                          const EnvConfig& cfg) {
  if (state.size() != next_state.size())
    throw std::invalid_argument("reward_components: state size mismatch");
  const int n = static_cast<int>(state.size());
  int before = 0, after = 0;
  for (int v : state)
    if (v != 0) ++before;
  for (int v : next_state)
    if (v != 0) ++after;
  RewardComponents rc;
  rc.r_c = n == 0 ? 0.0 : static_cast<double>(after - before) / n;
  if (after == n && n > 0) rc.r_t = static_cast<double>(cfg.B - t_after) / cfg.B;
  return rc;
}

struct StepResult {
  double reward = 0.0;
  double r_c = 0.0, r_t = 0.0;
  bool done = false;
  bool success = false;
  int rollbacks = 0;  // nodes reset by clean-up
  int t = 0;          // counter after the step
};

/// Induced subgraph on the deferred set plus per-node features:
/// [t/B, in-neighbor state one-hot sums, out-neighbor state one-hot sums],
/// with neighbors counted over the full graph.
struct Observation {
  std::vector<int> nodes;                   // original ids, ascending
  std::vector<std::pair<int, int>> edges;   // local indices
  std::vector<std::vector<double>> features;
  int alphabet = 0;

  int feature_width() const { return 1 + 2 * (alphabet + 1); }
};

/// Defer-and-commit MDP over a conflict graph. States live in {0..A}^V with
/// 0 = deferred; invalid assignments are rolled back by the mode's clean-up
/// rule on the post-update snapshot.
class DeferralEnv {
 public:
  DeferralEnv(const ConflictGraph& g, EnvConfig cfg)
      : graph_(&g), cfg_(cfg), nb_(g) {
    cfg_.validate();
    g.validate();
    if (cfg_.mode == EnvMode::matrix_rank_reduction) family_ = binary_vectors(cfg_.r);
    reset();
  }

  const EnvConfig& config() const { return cfg_; }
  const ConflictGraph& graph() const { return *graph_; }
  int alphabet() const { return cfg_.alphabet(); }
  const std::vector<int>& state() const { return state_; }
  int t() const { return t_; }
  bool done() const { return done_; }
  bool success() const { return success_; }

  void reset() {
    state_.assign(graph_->num_nodes, 0);
    t_ = 0;
    done_ = false;
    success_ = graph_->num_nodes == 0;
    if (success_) done_ = true;
  }

  std::vector<int> deferred() const {
    std::vector<int> out;
    for (int i = 0; i < graph_->num_nodes; ++i)
      if (state_[i] == 0) out.push_back(i);
    return out;
  }

  /// action[i] in [0,A] for deferred i, -1 everywhere else.
  StepResult step(const std::vector<int>& action) {
    if (done_) throw std::logic_error("step: episode already terminated");
    if (static_cast<int>(action.size()) != graph_->num_nodes)
      throw std::invalid_argument("step: action length mismatch");
    const int A = alphabet();
    for (int i = 0; i < graph_->num_nodes; ++i) {
      if (state_[i] == 0) {
        if (action[i] < 0 || action[i] > A)
          throw std::invalid_argument("step: action value out of range");
      } else if (action[i] != -1) {
        throw std::invalid_argument("step: action on a non-deferred node");
      }
    }

    std::vector<int> snap = state_;
    for (int i = 0; i < graph_->num_nodes; ++i)
      if (state_[i] == 0) snap[i] = action[i];

    std::vector<char> reset(graph_->num_nodes, 0);
    if (cfg_.mode == EnvMode::matrix_rank_reduction) {
      matrix_cleanup(snap, reset);
    } else {
      for (const auto& [u, v] : nb_.undirected_edges)
        if (snap[u] != 0 && snap[u] == snap[v]) reset[u] = reset[v] = 1;
      if (cfg_.mode == EnvMode::local_coloring && t_ < locality_cutoff()) {
        for (int i = 0; i < graph_->num_nodes; ++i) {
          std::set<int> seen;
          if (snap[i] != 0) seen.insert(snap[i]);
          for (int j : nb_.in[i])
            if (snap[j] != 0) seen.insert(snap[j]);
          if (static_cast<int>(seen.size()) > cfg_.r) {
            reset[i] = 1;
            for (int j : nb_.in[i]) reset[j] = 1;
          }
        }
      }
    }

    StepResult out;
    for (int i = 0; i < graph_->num_nodes; ++i) {
      if (reset[i]) {
        if (snap[i] != 0) ++out.rollbacks;
        snap[i] = 0;
      }
    }
    const std::vector<int> prev = state_;
    state_ = std::move(snap);
    ++t_;
    const int after = assigned_count();
    success_ = after == graph_->num_nodes;
    done_ = success_ || t_ >= cfg_.B;
    const RewardComponents rc = reward_components(prev, state_, t_, cfg_);
    out.r_c = rc.r_c;
    out.r_t = rc.r_t;
    out.reward = rc.total(cfg_.beta);
    out.done = done_;
    out.success = success_;
    out.t = t_;
    return out;
  }

  Observation observe() const {
    Observation obs;
    obs.alphabet = alphabet();
    std::vector<int> local(graph_->num_nodes, -1);
    for (int i = 0; i < graph_->num_nodes; ++i)
      if (state_[i] == 0) {
        local[i] = static_cast<int>(obs.nodes.size());
        obs.nodes.push_back(i);
      }
    for (const auto& [u, v] : graph_->edges)
      if (local[u] >= 0 && local[v] >= 0) obs.edges.emplace_back(local[u], local[v]);
    const int A = alphabet();
    const double tb = static_cast<double>(t_) / cfg_.B;
    for (int i : obs.nodes) {
      std::vector<double> f(1 + 2 * (A + 1), 0.0);
      f[0] = tb;
      for (int j : nb_.in[i]) f[1 + state_[j]] += 1.0;
      for (int j : nb_.out[i]) f[1 + (A + 1) + state_[j]] += 1.0;
      obs.features.push_back(std::move(f));
    }
    return obs;
  }

  int assigned_count() const {
    int c = 0;
    for (int v : state_)
      if (v != 0) ++c;
    return c;
  }

  int locality_cutoff() const {
    return static_cast<int>(std::ceil(cfg_.alpha * cfg_.B - 1e-9));
  }

 private:
  void matrix_cleanup(const std::vector<int>& snap, std::vector<char>& reset) const {
    for (int i = 0; i < graph_->num_nodes; ++i) {
      if (snap[i] == 0) continue;
      bool full = true;
      for (int j : nb_.in[i])
        if (snap[j] == 0) {
          full = false;
          break;
        }
      if (!full) continue;
      ExactMatrix open;
      open.cols = family_.dim;
      for (int j : nb_.in[i]) open.append_row(family_.vectors[snap[j] - 1]);
      const int r_n = rank_exact(open);
      open.append_row(family_.vectors[snap[i] - 1]);
      const int r_cn = rank_exact(open);
      if (r_cn - r_n != 1) {
        reset[i] = 1;
        for (int j : nb_.in[i]) reset[j] = 1;
      }
    }
  }

  const ConflictGraph* graph_;
  EnvConfig cfg_;
  Neighborhoods nb_;
  VectorFamily family_;
  std::vector<int> state_;
  int t_ = 0;
  bool done_ = false;
  bool success_ = false;
};

}  // namespace tim
