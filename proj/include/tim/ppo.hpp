#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "tim/env.hpp"
#include "tim/json_io.hpp"
#include "tim/policy.hpp"
#include "tim/rng.hpp"
#include "tim/solve.hpp"

namespace tim {

struct TrainConfig {
  int iterations = 1000;
  int rollouts_per_iter = 20;
  int epochs_per_batch = 4;
  double lr = 0.001;
  double clip_eps = 0.2;
  double value_coeff = 0.5;
  double entropy_coeff = 0.01;
  double gamma = 1.0;
  double gae_lambda = 0.95;
  double grad_clip = 0.2;
  int hidden = 128;
  int layers = 4;
  std::uint64_t seed = 0;

  void validate() const {
    if (iterations < 1 || rollouts_per_iter < 1 || epochs_per_batch < 1)
      throw std::invalid_argument("TrainConfig: counts must be positive");
    if (lr <= 0 || clip_eps <= 0 || grad_clip <= 0)
      throw std::invalid_argument("TrainConfig: lr, clip_eps, grad_clip must be positive");
  }
};

namespace detail {

inline std::size_t param_count(const PolicyParams& p) {
  std::size_t n = 0;
  for (const auto& m : p.w1) n += m.size();
  for (const auto& m : p.w2) n += m.size();
  return n + p.head_w.size() + p.head_b.size() + p.value_w.size();
}

inline void flatten_into(const PolicyParams& p, Eigen::VectorXd& out) {
  out.resize(static_cast<Eigen::Index>(param_count(p)));
  Eigen::Index off = 0;
  auto put = [&](const Eigen::MatrixXd& m) {
    out.segment(off, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    off += m.size();
  };
  for (std::size_t l = 0; l < p.w1.size(); ++l) {
    put(p.w1[l]);
    put(p.w2[l]);
  }
  put(p.head_w);
  out.segment(off, p.head_b.size()) = p.head_b;
  off += p.head_b.size();
  out.segment(off, p.value_w.size()) = p.value_w;
}

inline void unflatten_from(const Eigen::VectorXd& v, PolicyParams& p) {
  Eigen::Index off = 0;
  auto take = [&](Eigen::MatrixXd& m) {
    Eigen::Map<Eigen::VectorXd>(m.data(), m.size()) = v.segment(off, m.size());
    off += m.size();
  };
  for (std::size_t l = 0; l < p.w1.size(); ++l) {
    take(p.w1[l]);
    take(p.w2[l]);
  }
  take(p.head_w);
  p.head_b = v.segment(off, p.head_b.size());
  off += p.head_b.size();
  p.value_w = v.segment(off, p.value_w.size());
}

inline Eigen::VectorXd flatten_grads(const PolicyParams& shape, const PolicyGrads& g) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(param_count(shape)));
  Eigen::Index off = 0;
  auto put = [&](const Eigen::MatrixXd& m) {
    out.segment(off, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    off += m.size();
  };
  for (std::size_t l = 0; l < g.w1.size(); ++l) {
    put(g.w1[l]);
    put(g.w2[l]);
  }
  put(g.head_w);
  out.segment(off, g.head_b.size()) = g.head_b;
  off += g.head_b.size();
  out.segment(off, g.value_w.size()) = g.value_w;
  return out;
}

}  // namespace detail

struct Adam {
  double lr = 0.001, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  Eigen::VectorXd m, v;
  long t = 0;

  void step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad) {
    if (m.size() == 0) {
      m = Eigen::VectorXd::Zero(theta.size());
      v = Eigen::VectorXd::Zero(theta.size());
    }
    ++t;
    m = beta1 * m + (1 - beta1) * grad;
    v = beta2 * v + (1 - beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 / (1 - std::pow(beta1, t));
    const double c2 = 1.0 / (1 - std::pow(beta2, t));
    theta -= lr * (c1 * m.array() / ((c2 * v.array()).sqrt() + eps)).matrix();
  }
};

struct StepRecord {
  Observation obs;
  std::vector<int> picks;  // per observation node
  double log_prob = 0.0;
  double value = 0.0;
  double reward = 0.0;
  double advantage = 0.0;
  double value_target = 0.0;
};

struct EpisodeRecord {
  std::vector<StepRecord> steps;
  bool success = false;
  double total_reward = 0.0;
};

struct RolloutBatch {
  std::vector<EpisodeRecord> episodes;
  double mean_entropy = 0.0;
  int total_steps = 0;
};

inline RolloutBatch collect_rollouts(const PolicyParams& params,
                                     const std::vector<const ConflictGraph*>& graphs,
                                     const EnvConfig& env_cfg, int rollouts,
                                     std::uint64_t iter_seed) {
  if (graphs.empty()) throw std::invalid_argument("collect_rollouts: no instances");
  RolloutBatch batch;
  double entropy_sum = 0.0;
  Rng pick_rng(derive_seed(iter_seed, seed_purpose::kTrainIter, 0));
  for (int e = 0; e < rollouts; ++e) {
    const ConflictGraph& g = *graphs[pick_rng.below(graphs.size())];
    DeferralEnv env(g, env_cfg);
    Rng rng(derive_seed(iter_seed, seed_purpose::kEpisode, e));
    EpisodeRecord ep;
    while (!env.done()) {
      StepRecord rec;
      rec.obs = env.observe();
      const PolicyForward f = policy_forward(params, rec.obs);
      rec.picks = sample_actions(f.probs, rng);
      rec.log_prob = joint_log_prob(f.probs, rec.picks);
      rec.value = f.value;
      entropy_sum += mean_entropy(f.probs);
      std::vector<int> action(g.num_nodes, -1);
      for (std::size_t k = 0; k < rec.obs.nodes.size(); ++k)
        action[rec.obs.nodes[k]] = rec.picks[k];
      const StepResult sr = env.step(action);
      rec.reward = sr.reward;
      ep.steps.push_back(std::move(rec));
      ep.total_reward += sr.reward;
    }
    ep.success = env.success();
    batch.total_steps += static_cast<int>(ep.steps.size());
    batch.episodes.push_back(std::move(ep));
  }
  batch.mean_entropy = batch.total_steps > 0 ? entropy_sum / batch.total_steps : 0.0;
  return batch;
}

/// Generalized advantage estimation with terminal bootstrap 0.
inline void compute_gae(RolloutBatch& batch, double gamma, double lambda) {
  for (auto& ep : batch.episodes) {
    double adv = 0.0;
    for (int t = static_cast<int>(ep.steps.size()) - 1; t >= 0; --t) {
      const double next_v = t + 1 < static_cast<int>(ep.steps.size()) ? ep.steps[t + 1].value
                                                                      : 0.0;
      const double delta = ep.steps[t].reward + gamma * next_v - ep.steps[t].value;
      adv = delta + gamma * lambda * adv;
      ep.steps[t].advantage = adv;
      ep.steps[t].value_target = adv + ep.steps[t].value;
    }
  }
}

struct UpdateStats {
  double loss = 0.0;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;          // before clipping
  double clipped_grad_norm = 0.0;  // the norm actually handed to Adam
  bool finite = true;
};

/// One clipped-surrogate pass over the whole batch; returns the loss at the
/// parameters it was evaluated with.
inline UpdateStats ppo_epoch(PolicyParams& params, Adam& adam, const RolloutBatch& batch,
                             const TrainConfig& cfg) {
  UpdateStats stats;
  if (batch.total_steps == 0) return stats;
  PolicyGrads grads = PolicyGrads::zeros_like(params);
  const double inv_t = 1.0 / batch.total_steps;
  int clipped = 0;
  for (const auto& ep : batch.episodes) {
    for (const auto& rec : ep.steps) {
      const PolicyForward f = policy_forward(params, rec.obs);
      const Eigen::Index n = f.probs.rows();
      const double new_lp = joint_log_prob(f.probs, rec.picks);
      const double ratio = std::exp(new_lp - rec.log_prob);
      const double lo = 1.0 - cfg.clip_eps, hi = 1.0 + cfg.clip_eps;
      const double surr = std::min(ratio * rec.advantage,
                                   std::clamp(ratio, lo, hi) * rec.advantage);
      const bool active = !((rec.advantage > 0 && ratio > hi) ||
                            (rec.advantage < 0 && ratio < lo));
      if (!active) ++clipped;
      const double verr = f.value - rec.value_target;

      double entropy = 0.0;
      Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(n, f.probs.cols());
      const double lp_coeff = active ? -inv_t * rec.advantage * ratio : 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        double h = 0.0;
        for (Eigen::Index j = 0; j < f.probs.cols(); ++j) {
          const double q = f.probs(i, j);
          if (q > 0) h -= q * std::log(q);
        }
        entropy += h;
        for (Eigen::Index j = 0; j < f.probs.cols(); ++j) {
          const double q = f.probs(i, j);
          const double dlp = (j == rec.picks[i] ? 1.0 : 0.0) - q;
          const double dent = -q * (std::log(std::max(q, 1e-300)) + h);
          dlogits(i, j) = lp_coeff * dlp -
                          cfg.entropy_coeff * inv_t / static_cast<double>(n) * dent;
        }
      }
      const double dvalue = inv_t * cfg.value_coeff * 2.0 * verr;
      policy_backward(params, f, dlogits, dvalue, grads);
      stats.loss += inv_t * (-surr + cfg.value_coeff * verr * verr -
                             cfg.entropy_coeff * entropy / static_cast<double>(n));
    }
  }
  stats.clip_fraction = static_cast<double>(clipped) / batch.total_steps;
  if (!std::isfinite(stats.loss)) {
    stats.finite = false;
    return stats;
  }

  Eigen::VectorXd flat_grad = detail::flatten_grads(params, grads);
  stats.grad_norm = flat_grad.norm();
  if (!std::isfinite(stats.grad_norm)) {
    stats.finite = false;
    return stats;
  }
  if (stats.grad_norm > cfg.grad_clip) flat_grad *= cfg.grad_clip / stats.grad_norm;
  stats.clipped_grad_norm = flat_grad.norm();
  Eigen::VectorXd theta;
  detail::flatten_into(params, theta);
  adam.step(theta, flat_grad);
  detail::unflatten_from(theta, params);
  return stats;
}

struct TrainResult {
  PolicyParams params;
  std::vector<CurvePoint> curve;
  bool diverged = false;
};

/// Full training loop: per iteration, rollouts_per_iter sampled episodes over
/// the instance pool, epochs_per_batch clipped-surrogate passes, one curve
/// row. A non-finite loss aborts and returns the last finite parameters.
inline TrainResult train(const std::vector<ConflictGraph>& graphs, EnvConfig env_cfg,
                         const TrainConfig& cfg,
                         const std::function<void(const CurvePoint&)>& progress = {}) {
  cfg.validate();
  env_cfg.validate();
  if (graphs.empty()) throw std::invalid_argument("train: empty instance pool");
  std::vector<const ConflictGraph*> pool;
  for (const auto& g : graphs) pool.push_back(&g);

  PolicyConfig pc;
  pc.A = env_cfg.alphabet();
  pc.input_dim = 1 + 2 * (pc.A + 1);
  pc.hidden = cfg.hidden;
  pc.layers = cfg.layers;

  TrainResult out;
  out.params = init_policy(pc, derive_seed(cfg.seed, seed_purpose::kPolicyInit, 0));
  Adam adam;
  adam.lr = cfg.lr;

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    RolloutBatch batch =
        collect_rollouts(out.params, pool, env_cfg, cfg.rollouts_per_iter,
                         derive_seed(cfg.seed, seed_purpose::kTrainIter, iter));
    compute_gae(batch, cfg.gamma, cfg.gae_lambda);

    PolicyParams snapshot = out.params;
    Adam adam_snapshot = adam;
    bool finite = true;
    for (int epoch = 0; epoch < cfg.epochs_per_batch && finite; ++epoch)
      finite = ppo_epoch(out.params, adam, batch, cfg).finite;
    if (!finite) {
      out.params = std::move(snapshot);
      adam = std::move(adam_snapshot);
      out.diverged = true;
      return out;
    }

    CurvePoint pt;
    pt.iteration = iter;
    double reward_sum = 0.0;
    int successes = 0;
    for (const auto& ep : batch.episodes) {
      reward_sum += ep.total_reward;
      successes += ep.success ? 1 : 0;
    }
    pt.mean_reward = reward_sum / batch.episodes.size();
    pt.success_ratio = static_cast<double>(successes) / batch.episodes.size();
    pt.entropy = batch.mean_entropy;
    out.curve.push_back(pt);
    if (progress) progress(pt);
  }
  return out;
}

}  // namespace tim
