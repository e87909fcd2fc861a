#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <memory>
#include <set>
#include <vector>

#include <tim/env.hpp>
#include <tim/policy.hpp>
#include <tim/ppo.hpp>
#include <tim/rng.hpp>

#include "fixtures.hpp"
#include "oracle.hpp"

using tim::DeferralEnv;
using tim::EnvConfig;
using tim::EnvMode;
using tim::Observation;
using tim::PolicyConfig;
using tim::PolicyParams;

namespace {

PolicyConfig small_cfg(int A, int hidden = 8, int layers = 2) {
  PolicyConfig c;
  c.A = A;
  c.input_dim = 1 + 2 * (A + 1);
  c.hidden = hidden;
  c.layers = layers;
  return c;
}

EnvConfig env_cfg(int K, int B = 16) {
  EnvConfig c;
  c.mode = EnvMode::coloring;
  c.K = K;
  c.B = B;
  return c;
}

Observation observed_after_random_steps(const tim::ConflictGraph& g, const EnvConfig& cfg,
                                        int steps, tim::Rng& rng) {
  DeferralEnv env(g, cfg);
  auto policy = tim::make_random_policy();
  for (int s = 0; s < steps && !env.done(); ++s) env.step(policy(env, env.observe(), rng));
  return env.observe();
}

}  // namespace

TEST_CASE("zero weights give uniform probabilities and zero value") {
  const auto cfg = small_cfg(3);
  PolicyParams p = tim::init_policy(cfg, 1);
  for (auto& m : p.w1) m.setZero();
  for (auto& m : p.w2) m.setZero();
  p.head_w.setZero();
  p.head_b.setZero();
  p.value_w.setZero();
  const auto tri = fixtures::directed_triangle();
  DeferralEnv env(tri, env_cfg(3));
  const auto f = tim::policy_forward(p, env.observe());
  CHECK(f.value == 0.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) CHECK(f.probs(i, j) == Catch::Approx(0.25));
}

TEST_CASE("probability rows sum to one") {
  tim::Rng rng(1001);
  const auto cfg = small_cfg(3, 16, 3);
  const PolicyParams p = tim::init_policy(cfg, 7);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = oracle::random_digraph(rng.range(1, 7), 0.4, rng);
    const auto obs = observed_after_random_steps(g, env_cfg(3), rng.range(0, 2), rng);
    if (obs.nodes.empty()) continue;
    const auto f = tim::policy_forward(p, obs);
    for (Eigen::Index i = 0; i < f.probs.rows(); ++i)
      CHECK(std::abs(f.probs.row(i).sum() - 1.0) < 1e-12);
  }
}

TEST_CASE("value is zero on the empty observation and sums over components") {
  const auto cfg = small_cfg(2);
  const PolicyParams p = tim::init_policy(cfg, 3);
  Observation empty;
  empty.alphabet = 2;
  const auto fe = tim::policy_forward(p, empty);
  CHECK(fe.value == 0.0);
  CHECK(fe.probs.rows() == 0);

  // one triangle vs two disjoint triangles with identical features
  const auto tri = fixtures::directed_triangle();
  DeferralEnv env(tri, env_cfg(2));
  const auto obs1 = env.observe();
  Observation obs2 = obs1;
  for (int k = 0; k < 3; ++k) {
    obs2.nodes.push_back(obs1.nodes[k] + 3);
    obs2.features.push_back(obs1.features[k]);
  }
  for (const auto& [u, v] : obs1.edges) obs2.edges.emplace_back(u + 3, v + 3);
  const auto f1 = tim::policy_forward(p, obs1);
  const auto f2 = tim::policy_forward(p, obs2);
  CHECK(f2.value == Catch::Approx(2.0 * f1.value).epsilon(1e-12));
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < 3; ++j) {
      CHECK(f2.probs(k, j) == Catch::Approx(f1.probs(k, j)).epsilon(1e-12));
      CHECK(f2.probs(k + 3, j) == Catch::Approx(f1.probs(k, j)).epsilon(1e-12));
    }
}

TEST_CASE("permuting the observation permutes the policy and fixes the value") {
  tim::Rng rng(1002);
  const auto cfg = small_cfg(3, 12, 3);
  const PolicyParams p = tim::init_policy(cfg, 11);
  const auto g = oracle::random_digraph(6, 0.5, rng);
  const auto obs = observed_after_random_steps(g, env_cfg(3), 1, rng);
  if (obs.nodes.size() < 2) return;
  const int n = static_cast<int>(obs.nodes.size());
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  rng.shuffle(perm);  // perm[old] = new local index
  Observation permuted;
  permuted.alphabet = obs.alphabet;
  permuted.nodes.resize(n);
  permuted.features.resize(n);
  for (int i = 0; i < n; ++i) {
    permuted.nodes[perm[i]] = obs.nodes[i];
    permuted.features[perm[i]] = obs.features[i];
  }
  for (const auto& [u, v] : obs.edges) permuted.edges.emplace_back(perm[u], perm[v]);
  const auto fa = tim::policy_forward(p, obs);
  const auto fb = tim::policy_forward(p, permuted);
  CHECK(fb.value == Catch::Approx(fa.value).epsilon(1e-10).margin(1e-12));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= cfg.A; ++j)
      CHECK(fb.probs(perm[i], j) == Catch::Approx(fa.probs(i, j)).epsilon(1e-10).margin(1e-12));
}

TEST_CASE("indistinguishable nodes get identical action distributions") {
  const auto cfg = small_cfg(3);
  const PolicyParams p = tim::init_policy(cfg, 13);
  const auto tri = fixtures::directed_triangle();
  DeferralEnv env(tri, env_cfg(3));
  const auto f = tim::policy_forward(p, env.observe());
  for (int j = 0; j <= 3; ++j) {
    CHECK(f.probs(0, j) == Catch::Approx(f.probs(1, j)).epsilon(1e-12));
    CHECK(f.probs(1, j) == Catch::Approx(f.probs(2, j)).epsilon(1e-12));
  }
}

TEST_CASE("shifting every head bias leaves the distribution unchanged") {
  const auto cfg = small_cfg(2);
  PolicyParams p = tim::init_policy(cfg, 17);
  const auto tri = fixtures::directed_triangle();
  DeferralEnv env(tri, env_cfg(2));
  const auto before = tim::policy_forward(p, env.observe());
  p.head_b.array() += 3.25;
  const auto after = tim::policy_forward(p, env.observe());
  for (Eigen::Index i = 0; i < before.probs.rows(); ++i)
    for (Eigen::Index j = 0; j < before.probs.cols(); ++j)
      CHECK(after.probs(i, j) == Catch::Approx(before.probs(i, j)).epsilon(1e-12));
}

TEST_CASE("analytic gradients match central differences") {
  tim::Rng rng(1003);
  const auto cfg = small_cfg(2, 6, 2);
  PolicyParams p = tim::init_policy(cfg, 19);
  for (int trial = 0; trial < 3; ++trial) {
    const auto g = oracle::random_digraph(rng.range(2, 5), 0.5, rng);
    const auto obs = observed_after_random_steps(g, env_cfg(2), trial % 2, rng);
    if (obs.nodes.empty()) continue;
    const int n = static_cast<int>(obs.nodes.size());
    Eigen::MatrixXd dlogits(n, cfg.A + 1);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= cfg.A; ++j) dlogits(i, j) = rng.normal();
    const double dvalue = rng.normal();

    auto grads = tim::PolicyGrads::zeros_like(p);
    const auto f = tim::policy_forward(p, obs);
    tim::policy_backward(p, f, dlogits, dvalue, grads);
    const Eigen::VectorXd analytic = tim::detail::flatten_grads(p, grads);

    Eigen::VectorXd theta;
    tim::detail::flatten_into(p, theta);
    std::vector<double> x(theta.data(), theta.data() + theta.size());
    auto loss = [&](const std::vector<double>& v) {
      PolicyParams q = p;
      Eigen::VectorXd tv = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
      tim::detail::unflatten_from(tv, q);
      const auto fq = tim::policy_forward(q, obs);
      double L = dvalue * fq.value;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j <= cfg.A; ++j) L += dlogits(i, j) * fq.logits(i, j);
      return L;
    };
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      const double fd = oracle::central_diff(loss, x, static_cast<std::size_t>(k), 1e-5);
      CHECK(oracle::relative_error(analytic[k], fd) <= 1e-4);
    }
  }
}

TEST_CASE("fresh policies are near-uniform") {
  for (int A : {2, 3, 5}) {
    const auto cfg = small_cfg(A, 32, 4);
    const PolicyParams p = tim::init_policy(cfg, 23);
    const auto g = fixtures::undirected_cycle(5);
    DeferralEnv env(g, env_cfg(A));
    const auto f = tim::policy_forward(p, env.observe());
    const double h = tim::mean_entropy(f.probs);
    CHECK(h > 0.99 * std::log(static_cast<double>(A + 1)));
    CHECK(h <= std::log(static_cast<double>(A + 1)) + 1e-12);
  }
}

TEST_CASE("action sampling is seed-reproducible and respects the distribution") {
  Eigen::MatrixXd probs(2, 3);
  probs << 1.0, 0.0, 0.0, 0.0, 0.0, 1.0;
  tim::Rng rng(29);
  const auto picks = tim::sample_actions(probs, rng);
  CHECK(picks == std::vector<int>{0, 2});

  Eigen::MatrixXd fair(1, 2);
  fair << 0.5, 0.5;
  tim::Rng a(31), b(31);
  for (int i = 0; i < 50; ++i)
    CHECK(tim::sample_actions(fair, a) == tim::sample_actions(fair, b));
  int ones = 0;
  tim::Rng c(37);
  for (int i = 0; i < 2000; ++i) ones += tim::sample_actions(fair, c)[0];
  CHECK(ones > 800);
  CHECK(ones < 1200);
}

TEST_CASE("joint log-probability sums per-node terms") {
  Eigen::MatrixXd probs(2, 2);
  probs << 0.25, 0.75, 0.5, 0.5;
  const double lp = tim::joint_log_prob(probs, {1, 0});
  CHECK(lp == Catch::Approx(std::log(0.75) + std::log(0.5)));
  CHECK(tim::mean_entropy(probs) ==
        Catch::Approx(0.5 * (-(0.25 * std::log(0.25) + 0.75 * std::log(0.75)) + std::log(2.0))));
}

TEST_CASE("checkpoints round-trip bit-exactly and reject corruption") {
  const auto cfg = small_cfg(3, 10, 3);
  const PolicyParams p = tim::init_policy(cfg, 41);
  EnvConfig env = env_cfg(3, 24);
  env.mode = EnvMode::local_coloring;
  env.r = 2;
  env.alpha = 0.25;
  env.beta = 0.75;
  const std::string bytes = tim::checkpoint_bytes(p, env);
  const auto [q, back] = tim::checkpoint_from_bytes(bytes);
  CHECK(back.mode == env.mode);
  CHECK(back.K == env.K);
  CHECK(back.r == env.r);
  CHECK(back.B == env.B);
  CHECK(back.alpha == env.alpha);
  CHECK(back.beta == env.beta);
  CHECK(tim::checkpoint_bytes(q, back) == bytes);

  CHECK_THROWS(tim::checkpoint_from_bytes(bytes.substr(0, bytes.size() - 3)));
  CHECK_THROWS(tim::checkpoint_from_bytes(bytes + "x"));
  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS(tim::checkpoint_from_bytes(bad));

  const std::string path = "policy_test_ckpt.bin";
  tim::save_checkpoint(path, p, env);
  const auto [q2, env2] = tim::load_checkpoint(path);
  CHECK(tim::checkpoint_bytes(q2, env2) == bytes);
  std::remove(path.c_str());
  CHECK_THROWS(tim::load_checkpoint(path));
}

TEST_CASE("the random policy emits legal actions covering the alphabet") {
  const auto tri = fixtures::directed_triangle();
  DeferralEnv env(tri, env_cfg(3));
  auto policy = tim::make_random_policy();
  tim::Rng rng(43);
  std::vector<std::set<int>> seen(3);
  for (int trial = 0; trial < 1000; ++trial) {
    env.reset();
    const auto action = policy(env, env.observe(), rng);
    REQUIRE(action.size() == 3);
    for (int i = 0; i < 3; ++i) {
      CHECK(action[i] >= 0);
      CHECK(action[i] <= 3);
      seen[i].insert(action[i]);
    }
  }
  for (const auto& s : seen) CHECK(s.size() == 4);
}

TEST_CASE("greedy one-node-at-a-time reproduces sequential greedy coloring") {
  tim::Rng rng(47);
  auto policy = tim::make_greedy_defer_policy(1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = oracle::random_digraph(rng.range(1, 8), 0.4, rng);
    const auto adj = oracle::undirected_adjacency(g);
    std::vector<int> greedy(g.num_nodes, 0);
    for (int i = 0; i < g.num_nodes; ++i) {
      std::set<int> used;
      for (int j = 0; j < g.num_nodes; ++j)
        if (adj[i][j]) used.insert(greedy[j]);
      int c = 1;
      while (used.count(c)) ++c;
      greedy[i] = c;
    }
    const int K = *std::max_element(greedy.begin(), greedy.end());

    DeferralEnv env(g, env_cfg(K, g.num_nodes + 2));
    for (int i = 0; i < g.num_nodes; ++i) {
      const auto suggested = policy(env, env.observe(), rng);
      std::vector<int> action(g.num_nodes, -1);
      for (int v : env.deferred()) action[v] = v == i ? suggested[v] : 0;
      env.step(action);
    }
    CHECK(env.success());
    CHECK(env.state() == greedy);
  }
}

TEST_CASE("greedy with zero commit probability defers forever") {
  const auto tri = fixtures::directed_triangle();
  DeferralEnv env(tri, env_cfg(3, 4));
  auto policy = tim::make_greedy_defer_policy(0.0);
  tim::Rng rng(53);
  while (!env.done()) env.step(policy(env, env.observe(), rng));
  CHECK_FALSE(env.success());
  CHECK(env.state() == std::vector<int>{0, 0, 0});
}

TEST_CASE("network policies act legally across alphabet mismatches") {
  tim::Rng rng(59);
  for (int a_net : {2, 3, 5}) {
    auto params = std::make_shared<PolicyParams>(tim::init_policy(small_cfg(a_net), 61));
    auto policy = tim::make_network_policy(params);
    const auto g = fixtures::cycle_with_sink();
    DeferralEnv env(g, env_cfg(3, 8));
    while (!env.done()) {
      const auto obs = env.observe();
      const auto action = policy(env, obs, rng);
      REQUIRE(action.size() == 4);
      for (int i = 0; i < 4; ++i) {
        if (env.state()[i] == 0) {
          CHECK(action[i] >= 0);
          CHECK(action[i] <= 3);
          if (a_net < 3) CHECK(action[i] <= a_net);
        } else {
          CHECK(action[i] == -1);
        }
      }
      env.step(action);
    }
  }
}
