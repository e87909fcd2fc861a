#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tim/env.hpp"
#include "tim/rng.hpp"

namespace tim {

struct PolicyConfig {
  int A = 0;
  int input_dim = 0;
  int hidden = 128;
  int layers = 4;

  void validate() const {
    if (A < 1 || input_dim < 1 || hidden < 1 || layers < 1)
      throw std::invalid_argument("PolicyConfig: all dimensions must be positive");
    if (input_dim != 1 + 2 * (A + 1))
      throw std::invalid_argument("PolicyConfig: input_dim inconsistent with alphabet");
  }
};

/// Trunk: layers of H' = ReLU(H W1 + P H W2) with P the symmetric normalized
/// adjacency of the observed subgraph. Heads: per-node softmax logits and a
/// sum-pooled scalar value.
struct PolicyParams {
  PolicyConfig cfg;
  std::vector<Eigen::MatrixXd> w1, w2;
  Eigen::MatrixXd head_w;
  Eigen::VectorXd head_b;
  Eigen::VectorXd value_w;  // no bias: the value must vanish on empty graphs
};

struct PolicyGrads {
  std::vector<Eigen::MatrixXd> w1, w2;
  Eigen::MatrixXd head_w;
  Eigen::VectorXd head_b;
  Eigen::VectorXd value_w;

  static PolicyGrads zeros_like(const PolicyParams& p) {
    PolicyGrads g;
    for (const auto& m : p.w1) g.w1.push_back(Eigen::MatrixXd::Zero(m.rows(), m.cols()));
    for (const auto& m : p.w2) g.w2.push_back(Eigen::MatrixXd::Zero(m.rows(), m.cols()));
    g.head_w = Eigen::MatrixXd::Zero(p.head_w.rows(), p.head_w.cols());
    g.head_b = Eigen::VectorXd::Zero(p.head_b.size());
    g.value_w = Eigen::VectorXd::Zero(p.value_w.size());
    return g;
  }
};

inline PolicyParams init_policy(const PolicyConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  PolicyParams p;
  p.cfg = cfg;
  Rng rng(seed);
  auto he = [&](int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    const double scale = std::sqrt(2.0 / rows);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
    return m;
  };
  constexpr double kHeadScale = 0.01;
  for (int l = 0; l < cfg.layers; ++l) {
    const int in = l == 0 ? cfg.input_dim : cfg.hidden;
    p.w1.push_back(he(in, cfg.hidden));
    p.w2.push_back(he(in, cfg.hidden));
  }
  p.head_w = kHeadScale * he(cfg.hidden, cfg.A + 1);
  p.head_b = Eigen::VectorXd::Zero(cfg.A + 1);
  p.value_w = Eigen::VectorXd(cfg.hidden);
  for (int i = 0; i < cfg.hidden; ++i) p.value_w[i] = kHeadScale * rng.normal();
  return p;
}

struct PolicyForward {
  Eigen::MatrixXd P;
  std::vector<Eigen::MatrixXd> h;   // h[0] = input features
  std::vector<Eigen::MatrixXd> ph;  // P * h[l] per trunk layer
  std::vector<Eigen::MatrixXd> z;
  Eigen::MatrixXd logits, probs;
  Eigen::VectorXd pooled;
  double value = 0.0;
};

namespace detail {

inline Eigen::MatrixXd propagation_matrix(const Observation& obs) {
  const int n = static_cast<int>(obs.nodes.size());
  Eigen::MatrixXd adj = Eigen::MatrixXd::Identity(n, n);
  for (const auto& [u, v] : obs.edges) adj(u, v) = adj(v, u) = 1.0;
  Eigen::VectorXd dinv(n);
  for (int i = 0; i < n; ++i) dinv[i] = 1.0 / std::sqrt(adj.row(i).sum());
  return dinv.asDiagonal() * adj * dinv.asDiagonal();
}

inline Eigen::MatrixXd feature_matrix(const Observation& obs) {
  const int n = static_cast<int>(obs.nodes.size());
  Eigen::MatrixXd h(n, obs.feature_width());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < obs.feature_width(); ++j) h(i, j) = obs.features[i][j];
  return h;
}

}  // namespace detail

inline PolicyForward policy_forward(const PolicyParams& p, const Observation& obs) {
  if (obs.feature_width() != p.cfg.input_dim)
    throw std::invalid_argument("policy_forward: observation width mismatch");
  PolicyForward f;
  f.P = detail::propagation_matrix(obs);
  f.h.push_back(detail::feature_matrix(obs));
  for (int l = 0; l < p.cfg.layers; ++l) {
    f.ph.push_back(f.P * f.h.back());
    f.z.push_back(f.h.back() * p.w1[l] + f.ph.back() * p.w2[l]);
    f.h.push_back(f.z.back().cwiseMax(0.0));
  }
  const Eigen::MatrixXd& top = f.h.back();
  f.logits = top * p.head_w;
  f.logits.rowwise() += p.head_b.transpose();
  f.probs = f.logits;
  for (Eigen::Index i = 0; i < f.probs.rows(); ++i) {
    const double mx = f.logits.row(i).maxCoeff();
    Eigen::ArrayXd e = (f.logits.row(i).array() - mx).exp();
    f.probs.row(i) = e / e.sum();
  }
  f.pooled = top.rows() > 0 ? Eigen::VectorXd(top.colwise().sum())
                            : Eigen::VectorXd::Zero(p.cfg.hidden);
  f.value = f.pooled.dot(p.value_w);
  return f;
}

/// Accumulates parameter gradients for dLoss/dlogits and dLoss/dvalue.
inline void policy_backward(const PolicyParams& p, const PolicyForward& f,
                            const Eigen::MatrixXd& dlogits, double dvalue, PolicyGrads& g) {
  const Eigen::MatrixXd& top = f.h.back();
  Eigen::MatrixXd dtop = dlogits * p.head_w.transpose();
  if (top.rows() > 0) dtop.rowwise() += (dvalue * p.value_w).transpose();
  g.head_w += top.transpose() * dlogits;
  g.head_b += dlogits.colwise().sum().transpose();
  g.value_w += dvalue * f.pooled;
  for (int l = p.cfg.layers - 1; l >= 0; --l) {
    const Eigen::MatrixXd dz =
        (f.z[l].array() > 0.0).cast<double>().matrix().cwiseProduct(dtop);
    g.w1[l] += f.h[l].transpose() * dz;
    g.w2[l] += f.ph[l].transpose() * dz;
    if (l > 0) dtop = dz * p.w1[l].transpose() + f.P * (dz * p.w2[l].transpose());
  }
}

inline std::vector<int> sample_actions(const Eigen::MatrixXd& probs, Rng& rng) {
  std::vector<int> actions(probs.rows());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const double u = rng.unit();
    double acc = 0.0;
    int pick = static_cast<int>(probs.cols()) - 1;
    for (Eigen::Index j = 0; j < probs.cols(); ++j) {
      acc += probs(i, j);
      if (u < acc) {
        pick = static_cast<int>(j);
        break;
      }
    }
    actions[i] = pick;
  }
  return actions;
}

inline double joint_log_prob(const Eigen::MatrixXd& probs, const std::vector<int>& actions) {
  double lp = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i)
    lp += std::log(std::max(probs(i, actions[i]), 1e-300));
  return lp;
}

inline double mean_entropy(const Eigen::MatrixXd& probs) {
  if (probs.rows() == 0) return 0.0;
  double h = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i)
    for (Eigen::Index j = 0; j < probs.cols(); ++j) {
      const double q = probs(i, j);
      if (q > 0) h -= q * std::log(q);
    }
  return h / static_cast<double>(probs.rows());
}

namespace detail {

inline void put_u32(std::string& s, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  s.append(b, 4);
}
inline void put_f64(std::string& s, double v) {
  char b[8];
  std::memcpy(b, &v, 8);
  s.append(b, 8);
}
inline std::uint32_t get_u32(const std::string& s, std::size_t& off) {
  if (off + 4 > s.size()) throw std::runtime_error("checkpoint: truncated");
  std::uint32_t v;
  std::memcpy(&v, s.data() + off, 4);
  off += 4;
  return v;
}
inline double get_f64(const std::string& s, std::size_t& off) {
  if (off + 8 > s.size()) throw std::runtime_error("checkpoint: truncated");
  double v;
  std::memcpy(&v, s.data() + off, 8);
  off += 8;
  return v;
}
inline void put_matrix(std::string& s, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) put_f64(s, m(i, j));
}
inline void get_matrix(const std::string& s, std::size_t& off, Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = get_f64(s, off);
}

}  // namespace detail

/// Binary checkpoint: magic, header {version, A, input_dim, layer widths},
/// the training environment configuration, then flat little-endian doubles
/// in declaration order.
inline std::string checkpoint_bytes(const PolicyParams& p, const EnvConfig& env) {
  std::string s = "TIMPOL01";
  detail::put_u32(s, 1);
  detail::put_u32(s, static_cast<std::uint32_t>(p.cfg.A));
  detail::put_u32(s, static_cast<std::uint32_t>(p.cfg.input_dim));
  detail::put_u32(s, static_cast<std::uint32_t>(p.cfg.layers));
  for (int l = 0; l < p.cfg.layers; ++l)
    detail::put_u32(s, static_cast<std::uint32_t>(p.cfg.hidden));
  detail::put_u32(s, static_cast<std::uint32_t>(env.mode));
  detail::put_u32(s, static_cast<std::uint32_t>(env.K));
  detail::put_u32(s, static_cast<std::uint32_t>(env.r));
  detail::put_u32(s, static_cast<std::uint32_t>(env.B));
  detail::put_f64(s, env.alpha);
  detail::put_f64(s, env.beta);
  for (int l = 0; l < p.cfg.layers; ++l) {
    detail::put_matrix(s, p.w1[l]);
    detail::put_matrix(s, p.w2[l]);
  }
  detail::put_matrix(s, p.head_w);
  detail::put_matrix(s, p.head_b);
  detail::put_matrix(s, p.value_w);
  return s;
}

inline std::pair<PolicyParams, EnvConfig> checkpoint_from_bytes(const std::string& s) {
  if (s.size() < 8 || s.compare(0, 8, "TIMPOL01") != 0)
    throw std::runtime_error("checkpoint: bad magic");
  std::size_t off = 8;
  if (detail::get_u32(s, off) != 1) throw std::runtime_error("checkpoint: bad version");
  PolicyParams p;
  p.cfg.A = static_cast<int>(detail::get_u32(s, off));
  p.cfg.input_dim = static_cast<int>(detail::get_u32(s, off));
  p.cfg.layers = static_cast<int>(detail::get_u32(s, off));
  if (p.cfg.layers < 1 || p.cfg.layers > 64) throw std::runtime_error("checkpoint: bad layers");
  std::vector<int> widths(p.cfg.layers);
  for (int& w : widths) w = static_cast<int>(detail::get_u32(s, off));
  for (int w : widths)
    if (w != widths[0]) throw std::runtime_error("checkpoint: nonuniform widths unsupported");
  p.cfg.hidden = widths[0];
  EnvConfig env;
  env.mode = static_cast<EnvMode>(detail::get_u32(s, off));
  env.K = static_cast<int>(detail::get_u32(s, off));
  env.r = static_cast<int>(detail::get_u32(s, off));
  env.B = static_cast<int>(detail::get_u32(s, off));
  env.alpha = detail::get_f64(s, off);
  env.beta = detail::get_f64(s, off);
  p.cfg.validate();
  for (int l = 0; l < p.cfg.layers; ++l) {
    const int in = l == 0 ? p.cfg.input_dim : p.cfg.hidden;
    p.w1.emplace_back(in, p.cfg.hidden);
    detail::get_matrix(s, off, p.w1.back());
    p.w2.emplace_back(in, p.cfg.hidden);
    detail::get_matrix(s, off, p.w2.back());
  }
  p.head_w.resize(p.cfg.hidden, p.cfg.A + 1);
  detail::get_matrix(s, off, p.head_w);
  Eigen::MatrixXd hb(p.cfg.A + 1, 1);
  detail::get_matrix(s, off, hb);
  p.head_b = hb.col(0);
  Eigen::MatrixXd vw(p.cfg.hidden, 1);
  detail::get_matrix(s, off, vw);
  p.value_w = vw.col(0);
  if (off != s.size()) throw std::runtime_error("checkpoint: trailing bytes");
  return {std::move(p), env};
}

inline void save_checkpoint(const std::string& path, const PolicyParams& p,
                            const EnvConfig& env) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  const std::string bytes = checkpoint_bytes(p, env);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("short write: " + path);
}

inline std::pair<PolicyParams, EnvConfig> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return checkpoint_from_bytes(bytes);
}

/// A policy maps the current environment to a full-length action vector
/// (-1 on assigned nodes). Network policies read only the observation.
using PolicyFn =
    std::function<std::vector<int>(const DeferralEnv&, const Observation&, Rng&)>;

inline PolicyFn make_random_policy() {
  return [](const DeferralEnv& env, const Observation& obs, Rng& rng) {
    std::vector<int> action(env.graph().num_nodes, -1);
    for (int i : obs.nodes) action[i] = static_cast<int>(rng.below(env.alphabet() + 1));
    return action;
  };
}

/// Assigns the lowest value unused by any assigned undirected neighbor with
/// probability rho per node, and defers otherwise.
inline PolicyFn make_greedy_defer_policy(double rho) {
  return [rho](const DeferralEnv& env, const Observation& obs, Rng& rng) {
    std::vector<int> action(env.graph().num_nodes, -1);
    Neighborhoods nb(env.graph());
    const auto& s = env.state();
    for (int i : obs.nodes) {
      if (!rng.bernoulli(rho)) {
        action[i] = 0;
        continue;
      }
      std::vector<char> used(env.alphabet() + 1, 0);
      for (int j : nb.in[i]) used[s[j]] = 1;
      for (int j : nb.out[i]) used[s[j]] = 1;
      int pick = 0;
      for (int c = 1; c <= env.alphabet(); ++c)
        if (!used[c]) {
          pick = c;
          break;
        }
      action[i] = pick;
    }
    return action;
  };
}

/// Acts with a fixed-alphabet network in any environment. A smaller env
/// alphabet pads the one-hot blocks with zeros and masks the unavailable
/// actions; a larger one truncates them, which is lossless because this
/// policy never emits a value above its own alphabet.
inline PolicyFn make_network_policy(std::shared_ptr<const PolicyParams> params) {
  return [params](const DeferralEnv& env, const Observation& obs, Rng& rng) {
    std::vector<int> action(env.graph().num_nodes, -1);
    if (obs.nodes.empty()) return action;
    const int a_net = params->cfg.A;
    const int a_env = obs.alphabet;
    const Observation* use = &obs;
    Observation adapted;
    if (a_env != a_net) {
      adapted.nodes = obs.nodes;
      adapted.edges = obs.edges;
      adapted.alphabet = a_net;
      for (const auto& f : obs.features) {
        std::vector<double> g(1 + 2 * (a_net + 1), 0.0);
        g[0] = f[0];
        const int copy = std::min(a_env, a_net) + 1;
        for (int c = 0; c < copy; ++c) {
          g[1 + c] = f[1 + c];
          g[1 + (a_net + 1) + c] = f[1 + (a_env + 1) + c];
        }
        adapted.features.push_back(std::move(g));
      }
      use = &adapted;
    }
    PolicyForward f = policy_forward(*params, *use);
    if (a_env < a_net) {
      for (Eigen::Index i = 0; i < f.probs.rows(); ++i) {
        for (int j = a_env + 1; j <= a_net; ++j) f.probs(i, j) = 0.0;
        const double kept = f.probs.row(i).sum();
        if (kept > 0.0)
          f.probs.row(i) /= kept;
        else
          for (int j = 0; j <= a_env; ++j) f.probs(i, j) = 1.0 / (a_env + 1);
      }
    }
    std::vector<int> picks = sample_actions(f.probs, rng);
    for (int& v : picks)
      if (v > a_env) v = 0;
    for (std::size_t k = 0; k < obs.nodes.size(); ++k) action[obs.nodes[k]] = picks[k];
    return action;
  };
}

}  // namespace tim
