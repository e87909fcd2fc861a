#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <tim/coloring.hpp>
#include <tim/env.hpp>
#include <tim/generators.hpp>
#include <tim/graph.hpp>
#include <tim/json_io.hpp>
#include <tim/linalg.hpp>
#include <tim/policy.hpp>
#include <tim/ppo.hpp>
#include <tim/rng.hpp>
#include <tim/solve.hpp>
#include <tim/verify.hpp>

#include "../fixtures.hpp"
#include "../oracle.hpp"

namespace {

int env_int(const char* name, int fallback) {
  const char* v = std::getenv(name);
  if (!v || !*v) return fallback;
  const long parsed = std::strtol(v, nullptr, 10);
  return parsed >= 1 ? static_cast<int>(parsed) : fallback;
}

double env_double(const char* name, double fallback) {
  const char* v = std::getenv(name);
  if (!v || !*v) return fallback;
  const double parsed = std::strtod(v, nullptr);
  return parsed > 0 ? parsed : fallback;
}

struct Stopwatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

std::string fmt_seconds(double s) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(s < 10 ? 2 : 1);
  out << s << " s";
  return out.str();
}

// ---------------------------------------------------------------------------
// criterion 1: exact chromatic number equals brute force on random digraphs

bool criterion1(std::string& detail) {
  const int count = env_int("TIM_ACCEPT_C1_COUNT", 200);
  constexpr double kTimeLimit = 300.0;
  Stopwatch sw;
  tim::Rng rng(101);
  int agree = 0;
  for (int i = 0; i < count; ++i) {
    const int n = static_cast<int>(rng.range(1, 8));
    const double p = 0.1 + 0.75 * rng.unit();
    const auto g = oracle::random_digraph(n, p, rng);
    const auto res = tim::exact_chromatic(g);
    const int brute = oracle::brute_chromatic(g);
    if (res.exact && res.chi() == brute && tim::check_coloring(g, res.witness) &&
        res.witness.num_colors == brute)
      ++agree;
  }
  const double t = sw.seconds();
  std::ostringstream out;
  out << "exact chromatic number matches brute force with a valid witness on " << agree << "/"
      << count << " random digraphs (<=8 nodes) in " << fmt_seconds(t) << " (limit 300 s)";
  detail = out.str();
  return agree == count && t < kTimeLimit;
}

// ---------------------------------------------------------------------------
// criterion 2: selector with an exhaustive stand-in returns the brute-force
// local chromatic number, which never exceeds the chromatic number

bool criterion2(std::string& detail) {
  const int count = env_int("TIM_ACCEPT_C2_COUNT", 200);
  Stopwatch sw;
  tim::Rng rng(202);
  tim::EnvConfig base;
  base.mode = tim::EnvMode::coloring;
  base.K = 1;
  base.B = 8;
  const tim::PolicyFn policy = tim::make_exact_policy();
  int agree = 0, bounded = 0;
  for (int i = 0; i < count; ++i) {
    const int n = static_cast<int>(rng.range(1, 7));
    const double p = 0.1 + 0.75 * rng.unit();
    const auto g = oracle::random_digraph(n, p, rng);
    const auto sel = tim::k_selector(g, tim::EnvMode::local_coloring, policy, base, 1,
                                     2000 + static_cast<std::uint64_t>(i));
    const int chi = oracle::brute_chromatic(g);
    const int chi_local = oracle::brute_local_chromatic(g);
    if (sel.r == chi_local) ++agree;
    if (chi_local <= chi && sel.r <= chi) ++bounded;
  }
  const double t = sw.seconds();
  std::ostringstream out;
  out << "selector local bound equals brute force on " << agree << "/" << count
      << " digraphs (<=7 nodes), local bound <= chromatic number on " << bounded << "/" << count
      << ", in " << fmt_seconds(t);
  detail = out.str();
  return agree == count && bounded == count;
}

// ---------------------------------------------------------------------------
// criterion 3: pinned worked examples certify at their exact rational rates

bool criterion3(std::string& detail) {
  Stopwatch sw;
  bool ok = true;
  std::ostringstream out;

  const auto topo = fixtures::aligned_pair_topology();
  const tim::Scheme osia =
      tim::osia_scheme(build_conflict_graph(topo), {1, 2, 1, 3, 2}, &topo);
  const bool a = osia.certified && osia.d_sym == tim::Rational(1, 2);
  ok = ok && a;
  out << "aligned-pair one-to-one scheme d=" << osia.d_sym.str()
      << (a ? " certified" : " FAILED");

  const auto sink = fixtures::cycle_with_sink();
  const tim::Scheme ssia = tim::ssia_scheme(sink, {4, 2, 6, 1}, 3);
  const bool b = ssia.certified && ssia.d_sym == tim::Rational(1, 3);
  const bool c = !tim::exact_matrix_assignment(sink, 2).has_value();
  ok = ok && b && c;
  out << "; sink-cycle subspace scheme d=" << ssia.d_sym.str()
      << (b ? " certified" : " FAILED") << ", dimension-2 assignments "
      << (c ? "exhaustively infeasible" : "UNEXPECTEDLY FEASIBLE");

  const auto t4 = fixtures::tournament4();
  const tim::Scheme t4s = tim::osia_scheme(t4, {1, 2, 3, 4});
  const bool d = t4s.certified && t4s.K == 4 && t4s.r == 3 && t4s.d_sym == tim::Rational(1, 3);
  ok = ok && d;
  out << "; four-node tournament (4,3) code d=" << t4s.d_sym.str()
      << (d ? " certified" : " FAILED") << " in " << fmt_seconds(sw.seconds());
  detail = out.str();
  return ok;
}

// ---------------------------------------------------------------------------
// criterion 4: every r-column submatrix of every generator up to K=10 is
// nonsingular over its field

bool criterion4(std::string& detail) {
  constexpr int kMaxK = 10;
  constexpr double kTimeLimit = 60.0;
  Stopwatch sw;
  long subsets = 0;
  bool ok = true;
  for (int K = 1; K <= kMaxK && ok; ++K) {
    const std::int64_t p = tim::smallest_prime_at_least(std::max<std::int64_t>(K, 2));
    for (int r = 1; r <= K && ok; ++r) {
      const tim::ExactMatrix gen = tim::mds_generator(K, r, p);
      std::vector<int> pick(r);
      for (int i = 0; i < r; ++i) pick[i] = i;
      while (true) {
        tim::ExactMatrix sub(r, r);
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < r; ++j) sub.at(i, j) = gen.at(i, pick[j]);
        ++subsets;
        if (tim::rank_gfp(sub, p) != r) {
          ok = false;
          break;
        }
        int idx = r - 1;
        while (idx >= 0 && pick[idx] == K - r + idx) --idx;
        if (idx < 0) break;
        ++pick[idx];
        for (int j = idx + 1; j < r; ++j) pick[j] = pick[j - 1] + 1;
      }
    }
  }
  const double t = sw.seconds();
  std::ostringstream out;
  out << subsets << " column subsets across all K<=10, r<=K checked nonsingular in "
      << fmt_seconds(t) << " (limit 60 s)";
  detail = out.str();
  return ok && t < kTimeLimit;
}

// ---------------------------------------------------------------------------
// criterion 5: local colorings of split graphs merge into valid fractional
// local colorings

bool criterion5(std::string& detail) {
  const int count = env_int("TIM_ACCEPT_C5_COUNT", 100);
  Stopwatch sw;
  tim::Rng rng(505);
  int pass = 0, total = 0;
  for (int i = 0; i < count; ++i) {
    const int n = static_cast<int>(rng.range(1, 10));
    const auto g = oracle::random_digraph(n, 0.15 + 0.5 * rng.unit(), rng);
    for (int b = 2; b <= 3; ++b) {
      ++total;
      const auto split = tim::node_splitting_graph(g, b);
      const tim::Coloring col = tim::greedy_sli(split);
      tim::Neighborhoods nb(split);
      int r = 0;
      for (int v = 0; v < split.num_nodes; ++v) {
        std::set<int> seen{col.colors[v]};
        for (int u : nb.in[v]) seen.insert(col.colors[u]);
        r = std::max(r, static_cast<int>(seen.size()));
      }
      const auto sets = tim::merge_split_coloring(g, b, col.colors);
      if (tim::check_fractional_local_coloring(g, sets, col.num_colors, r, b)) ++pass;
    }
  }
  const double t = sw.seconds();
  std::ostringstream out;
  out << pass << "/" << total << " split-graph colorings (b in {2,3}, <=10 nodes) merged into "
      << "valid fractional local colorings in " << fmt_seconds(t);
  detail = out.str();
  return pass == total;
}

// ---------------------------------------------------------------------------
// criterion 6: per-instance dominance of the vector and subspace pipelines
// over the scalar one on fresh wireless ensembles

bool criterion6(std::string& detail) {
  const int target = env_int("TIM_ACCEPT_C6_SIZE", 25);
  const double threshold = env_double("TIM_ACCEPT_C6_THRESHOLD", 0.75);
  Stopwatch sw;

  std::vector<std::pair<tim::ConflictGraph, tim::TopologyInstance>> chi3, chi4;
  const int cap = 80 * target;
  for (int i = 0; i < cap; ++i) {
    if (static_cast<int>(chi3.size()) >= target && static_cast<int>(chi4.size()) >= target)
      break;
    tim::GenSpec spec;
    spec.family = tim::GraphFamily::WirelessNet;
    spec.num_sources = spec.num_destinations = 8;
    spec.params["threshold"] = threshold;
    spec.params["percentile"] = 1;
    spec.q = 1.0;
    spec.seed = tim::derive_seed(606, tim::seed_purpose::kGenerate, i);
    const auto res = tim::generate(spec);
    const auto label = tim::label_instance(res.graph);
    if (!label.labeled) continue;
    if (label.chi == 3 && static_cast<int>(chi3.size()) < target)
      chi3.emplace_back(res.graph, *res.topology);
    else if (label.chi == 4 && static_cast<int>(chi4.size()) < target)
      chi4.emplace_back(res.graph, *res.topology);
  }
  if (static_cast<int>(chi3.size()) < target || static_cast<int>(chi4.size()) < target) {
    std::ostringstream out;
    out << "ensemble generation fell short: " << chi3.size() << " three-chromatic and "
        << chi4.size() << " four-chromatic instances of " << target << " requested";
    detail = out.str();
    return false;
  }

  tim::EnvConfig base;
  base.mode = tim::EnvMode::coloring;
  base.K = 1;
  base.B = 32;
  const tim::PolicyFn policy = tim::make_greedy_defer_policy(0.85);
  constexpr int kEpisodes = 4;

  bool ok = true;
  int certified = 0, emitted = 0;
  for (std::size_t i = 0; i < chi3.size(); ++i) {
    const auto& [g, topo] = chi3[i];
    const std::uint64_t seed = 60000 + i;
    const auto osia = tim::solve_osia(g, policy, base, kEpisodes, seed, &topo);
    const auto o2 = tim::solve_ovia(g, 2, policy, base, kEpisodes, seed, &topo);
    const auto o3 = tim::solve_ovia(g, 3, policy, base, kEpisodes, seed, &topo);
    for (const auto* s : {&osia, &o2, &o3}) {
      if (!s->success) {
        ok = false;
        continue;
      }
      ++emitted;
      if (s->scheme.certified) ++certified;
    }
    ok = ok && osia.success && o2.success && o3.success &&
         o2.scheme.d_sym >= osia.scheme.d_sym && o3.scheme.d_sym >= osia.scheme.d_sym;
  }

  int osia_third = 0, ssia_third = 0;
  for (std::size_t i = 0; i < chi4.size(); ++i) {
    const auto& [g, topo] = chi4[i];
    const std::uint64_t seed = 70000 + i;
    const auto osia = tim::solve_osia(g, policy, base, kEpisodes, seed, &topo);
    const auto ssia = tim::solve_ssia(g, 3, policy, base, kEpisodes, seed, &topo);
    if (osia.success) {
      ++emitted;
      if (osia.scheme.certified) ++certified;
    }
    if (ssia.success) {
      ++emitted;
      if (ssia.scheme.certified) ++certified;
    }
    const bool osia_hits = osia.success && osia.scheme.d_sym == tim::Rational(1, 3);
    const bool ssia_hits = ssia.success && ssia.scheme.d_sym >= tim::Rational(1, 3);
    if (osia_hits) {
      ++osia_third;
      if (!ssia_hits) ok = false;
    }
    if (ssia_hits) ++ssia_third;
  }

  std::ostringstream out;
  out << "vector pipeline dominated scalar on " << chi3.size()
      << " three-chromatic wireless instances (b in {2,3}); subspace 1/3-achievers ("
      << ssia_third << ") cover scalar 1/3-achievers (" << osia_third << ") on " << chi4.size()
      << " four-chromatic instances; " << certified << "/" << emitted
      << " emitted schemes certified in " << fmt_seconds(sw.seconds());
  detail = out.str();
  return ok && certified == emitted;
}

// ---------------------------------------------------------------------------
// criterion 7: analytic gradients match central finite differences

bool criterion7(std::string& detail) {
  constexpr int kObsCount = 20;
  constexpr double kTol = 1e-4;
  Stopwatch sw;
  tim::Rng rng(707);

  tim::EnvConfig ecfg;
  ecfg.mode = tim::EnvMode::coloring;
  ecfg.K = 3;
  ecfg.B = 8;
  tim::PolicyConfig pcfg;
  pcfg.A = 3;
  pcfg.input_dim = 1 + 2 * (pcfg.A + 1);
  pcfg.hidden = 8;
  pcfg.layers = 2;
  tim::PolicyParams params = tim::init_policy(pcfg, 7171);

  double worst = 0.0;
  int used = 0;
  for (int trial = 0; used < kObsCount; ++trial) {
    const int n = static_cast<int>(rng.range(2, 6));
    const auto g = oracle::random_digraph(n, 0.5, rng);
    tim::DeferralEnv env(g, ecfg);
    for (int s = 0; s < trial % 3; ++s) {
      if (env.done()) break;
      std::vector<int> action(g.num_nodes, -1);
      for (int v : env.observe().nodes)
        action[v] = static_cast<int>(rng.below(static_cast<std::uint64_t>(ecfg.K) + 1));
      env.step(action);
    }
    if (env.done()) continue;
    const tim::Observation obs = env.observe();
    if (obs.nodes.empty()) continue;
    ++used;
    const int m = static_cast<int>(obs.nodes.size());
    Eigen::MatrixXd dlogits(m, pcfg.A + 1);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j <= pcfg.A; ++j) dlogits(i, j) = rng.normal();
    const double dvalue = rng.normal();

    auto grads = tim::PolicyGrads::zeros_like(params);
    const auto f = tim::policy_forward(params, obs);
    tim::policy_backward(params, f, dlogits, dvalue, grads);
    const Eigen::VectorXd analytic = tim::detail::flatten_grads(params, grads);

    Eigen::VectorXd theta;
    tim::detail::flatten_into(params, theta);
    std::vector<double> x(theta.data(), theta.data() + theta.size());
    auto loss = [&](const std::vector<double>& v) {
      tim::PolicyParams q = params;
      Eigen::VectorXd tv = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
      tim::detail::unflatten_from(tv, q);
      const auto fq = tim::policy_forward(q, obs);
      double L = dvalue * fq.value;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j <= pcfg.A; ++j) L += dlogits(i, j) * fq.logits(i, j);
      return L;
    };
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      const double fd = oracle::central_diff(loss, x, static_cast<std::size_t>(k), 1e-5);
      worst = std::max(worst, oracle::relative_error(analytic[k], fd));
    }
  }
  std::ostringstream out;
  out.setf(std::ios::scientific);
  out.precision(2);
  out << "max gradient relative error " << worst << " over " << used
      << " observations (tolerance 1e-4) in " << fmt_seconds(sw.seconds());
  detail = out.str();
  return worst <= kTol;
}

// ---------------------------------------------------------------------------
// criterion 8: desk-scale training beats the 0.90 best-of-20 bar and the
// random policy on held-out instances

std::vector<tim::ConflictGraph> chi5_pool(std::uint64_t master, int want, int cap) {
  std::vector<tim::ConflictGraph> pool;
  for (int i = 0; i < cap && static_cast<int>(pool.size()) < want; ++i) {
    tim::GenSpec spec;
    spec.family = tim::GraphFamily::ER;
    spec.num_sources = spec.num_destinations = 15;
    spec.params["p"] = 0.2;
    spec.q = 0.2;
    spec.seed = tim::derive_seed(master, tim::seed_purpose::kGenerate, i);
    const auto res = tim::generate(spec);
    const auto label = tim::label_instance(res.graph);
    if (label.labeled && label.chi == 5) pool.push_back(res.graph);
  }
  return pool;
}

bool criterion8(std::string& detail) {
  const int iters = env_int("TIM_ACCEPT_C8_ITERS", 1000);
  const int train_pool_size = env_int("TIM_ACCEPT_C8_TRAIN_POOL", 200);
  const int eval_pool_size = env_int("TIM_ACCEPT_C8_EVAL_POOL", 100);
  constexpr double kRatioBar = 0.90;
  constexpr std::uint64_t kTrainSeed = 424242;
  Stopwatch sw;

  const auto train_pool = chi5_pool(8101, train_pool_size, 40 * train_pool_size);
  const auto eval_pool = chi5_pool(8202, eval_pool_size, 40 * eval_pool_size);
  if (static_cast<int>(train_pool.size()) < train_pool_size ||
      static_cast<int>(eval_pool.size()) < eval_pool_size) {
    std::ostringstream out;
    out << "dataset generation fell short: " << train_pool.size() << " train / "
        << eval_pool.size() << " held-out five-chromatic instances";
    detail = out.str();
    return false;
  }

  tim::EnvConfig env;
  env.mode = tim::EnvMode::coloring;
  env.K = 5;
  env.B = 32;

  std::ostringstream cache_name;
  cache_name << "acceptance_c8_" << iters << "_" << kTrainSeed << ".ckpt";
  bool cached = false;
  tim::PolicyParams params;
  if (env_int("TIM_ACCEPT_C8_CACHE", 1) == 1) {
    try {
      auto [loaded, lenv] = tim::load_checkpoint(cache_name.str());
      if (lenv.mode == env.mode && lenv.K == env.K && lenv.B == env.B &&
          loaded.cfg.hidden == 128 && loaded.cfg.layers == 4) {
        params = std::move(loaded);
        cached = true;
      }
    } catch (const std::exception&) {
    }
  }

  bool diverged = false;
  if (!cached) {
    tim::TrainConfig cfg;
    cfg.iterations = iters;
    cfg.seed = kTrainSeed;
    const auto result = tim::train(train_pool, env, cfg, [&](const tim::CurvePoint& pt) {
      if (pt.iteration % 25 == 0 || pt.iteration + 1 == iters)
        std::cerr << "  training iteration " << pt.iteration << "/" << iters
                  << " mean_reward=" << pt.mean_reward << " success=" << pt.success_ratio
                  << "\n";
    });
    diverged = result.diverged;
    params = result.params;
    if (!diverged) {
      tim::save_checkpoint(cache_name.str(), params, env);
      std::ofstream curve(cache_name.str() + ".curve.csv", std::ios::binary);
      curve << tim::curve_csv(result.curve);
    }
  }

  const auto net = tim::make_network_policy(
      std::make_shared<const tim::PolicyParams>(params));
  const auto rnd = tim::make_random_policy();
  int net_hits = 0, rnd_hits = 0;
  for (std::size_t i = 0; i < eval_pool.size(); ++i) {
    const std::uint64_t seed = tim::derive_seed(8303, tim::seed_purpose::kEval, i);
    if (tim::evaluate_best_of_n(eval_pool[i], net, env, 20, seed).success) ++net_hits;
    if (tim::evaluate_best_of_n(eval_pool[i], rnd, env, 20, seed).success) ++rnd_hits;
  }
  const double ratio = static_cast<double>(net_hits) / eval_pool.size();
  const double rnd_ratio = static_cast<double>(rnd_hits) / eval_pool.size();

  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(3);
  out << "best-of-20 optimal ratio " << ratio << " (bar 0.90) vs random-policy " << rnd_ratio
      << " on " << eval_pool.size() << " held-out instances after " << iters << " iterations"
      << (cached ? " (cached checkpoint)" : "") << (diverged ? " TRAINING DIVERGED" : "")
      << " in " << fmt_seconds(sw.seconds());
  detail = out.str();
  return !diverged && ratio >= kRatioBar && ratio > rnd_ratio;
}

// ---------------------------------------------------------------------------
// criterion 9: classical baselines clear their bars on a matched ensemble

bool criterion9(std::string& detail) {
  const int count = env_int("TIM_ACCEPT_C9_COUNT", 100);
  constexpr double kSliBar = 0.90, kTabuBar = 0.95;
  Stopwatch sw;
  const auto pool = chi5_pool(9101, count, 40 * count);
  if (static_cast<int>(pool.size()) < count) {
    detail = "ensemble generation fell short for the baseline bar";
    return false;
  }
  int sli_hits = 0, tabu_hits = 0;
  bool valid = true;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const tim::Coloring sli = tim::greedy_sli(pool[i]);
    valid = valid && tim::check_coloring(pool[i], sli);
    if (sli.num_colors == 5) ++sli_hits;
    const auto tabu = tim::tabucol(pool[i], 5, 1000, 7,
                                   tim::derive_seed(9202, tim::seed_purpose::kBaseline, i));
    if (tabu.has_value()) {
      valid = valid && tim::check_coloring(pool[i], *tabu);
      ++tabu_hits;
    }
  }
  const double sli_ratio = static_cast<double>(sli_hits) / pool.size();
  const double tabu_ratio = static_cast<double>(tabu_hits) / pool.size();
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(3);
  out << "smallest-last greedy ratio " << sli_ratio << " (bar 0.90), tabu search ratio "
      << tabu_ratio << " (bar 0.95) on " << pool.size() << " instances, colorings "
      << (valid ? "all valid" : "INVALID") << " in " << fmt_seconds(sw.seconds());
  detail = out.str();
  return valid && sli_ratio >= kSliBar && tabu_ratio >= kTabuBar;
}

// ---------------------------------------------------------------------------
// criterion 10: identical seeds reproduce datasets, rollouts, curves, and
// result tables byte for byte

std::string dataset_fingerprint() {
  std::ostringstream out;
  for (int i = 0; i < 5; ++i) {
    tim::GenSpec spec;
    spec.family = tim::GraphFamily::ER;
    spec.num_sources = spec.num_destinations = 15;
    spec.params["p"] = 0.2;
    spec.q = 0.2;
    spec.seed = tim::derive_seed(1234, tim::seed_purpose::kGenerate, i);
    const auto res = tim::generate(spec);
    tim::ManifestRecord rec;
    rec.id = "det-" + std::to_string(i);
    rec.family = "er";
    rec.seed = spec.seed;
    rec.graph = res.graph;
    rec.topology = res.topology;
    const auto label = tim::label_instance(res.graph);
    if (label.labeled) {
      rec.chi = label.chi;
      rec.labeled = true;
    }
    out << tim::manifest_record_to_json(rec).dump() << "\n";
  }
  tim::GenSpec w;
  w.family = tim::GraphFamily::WirelessNet;
  w.num_sources = w.num_destinations = 8;
  w.params["threshold"] = 0.7;
  w.params["percentile"] = 1;
  w.seed = 999;
  out << tim::topology_to_json(*tim::generate(w).topology).dump() << "\n";
  return out.str();
}

std::string rollout_fingerprint() {
  const auto g1 = fixtures::cycle_with_sink();
  const auto g2 = fixtures::directed_triangle();
  tim::PolicyConfig pc;
  pc.A = 3;
  pc.input_dim = 1 + 2 * 4;
  pc.hidden = 8;
  pc.layers = 2;
  const auto params = tim::init_policy(pc, 77);
  tim::EnvConfig env;
  env.mode = tim::EnvMode::coloring;
  env.K = 3;
  env.B = 8;
  const auto batch =
      tim::collect_rollouts(params, {&g1, &g2}, env, 8, 991);
  std::ostringstream out;
  out.setf(std::ios::scientific);
  out.precision(17);
  for (const auto& ep : batch.episodes) {
    out << ep.success << " " << ep.total_reward << ":";
    for (const auto& st : ep.steps) {
      for (int pick : st.picks) out << pick << ",";
      out << st.log_prob << "/" << st.reward << ";";
    }
    out << "\n";
  }
  return out.str();
}

std::string curve_fingerprint() {
  std::vector<tim::ConflictGraph> pool{fixtures::cycle_with_sink(),
                                       fixtures::directed_triangle()};
  tim::EnvConfig env;
  env.mode = tim::EnvMode::coloring;
  env.K = 4;
  env.B = 8;
  tim::TrainConfig cfg;
  cfg.iterations = 3;
  cfg.rollouts_per_iter = 4;
  cfg.hidden = 8;
  cfg.layers = 2;
  cfg.seed = 321;
  return tim::curve_csv(tim::train(pool, env, cfg).curve);
}

std::string results_fingerprint() {
  tim::Rng rng(4040);
  std::vector<tim::ResultRow> rows;
  tim::EnvConfig base;
  base.mode = tim::EnvMode::coloring;
  base.K = 1;
  base.B = 8;
  const auto policy = tim::make_greedy_defer_policy(0.8);
  for (int i = 0; i < 3; ++i) {
    const auto g = oracle::random_digraph(5, 0.5, rng);
    const auto sol = tim::solve_coloring(g, policy, base, 2, 100 + i);
    tim::ResultRow row;
    row.dataset = "det";
    row.method = "TDMA";
    row.instance_id = "det-" + std::to_string(i);
    row.success = sol.success;
    row.K = sol.scheme.K;
    row.r = sol.scheme.r;
    row.b = sol.scheme.b;
    row.x = sol.scheme.x;
    row.d_sym = sol.scheme.d_sym;
    row.seed = 100 + i;
    rows.push_back(row);
  }
  return tim::results_csv(rows);
}

bool criterion10(std::string& detail) {
  Stopwatch sw;
  const bool datasets = dataset_fingerprint() == dataset_fingerprint();
  const bool rollouts = rollout_fingerprint() == rollout_fingerprint();
  const bool curves = curve_fingerprint() == curve_fingerprint();
  const bool tables = results_fingerprint() == results_fingerprint();
  std::ostringstream out;
  out << "byte-identical reruns: datasets " << (datasets ? "yes" : "NO") << ", rollouts "
      << (rollouts ? "yes" : "NO") << ", training curves " << (curves ? "yes" : "NO")
      << ", result tables " << (tables ? "yes" : "NO") << " in " << fmt_seconds(sw.seconds());
  detail = out.str();
  return datasets && rollouts && curves && tables;
}

}  // namespace

int main() {
  using CriterionFn = bool (*)(std::string&);
  const std::pair<CriterionFn, const char*> criteria[] = {
      {criterion1, "exact coloring oracle"},
      {criterion2, "exact local-coloring oracle"},
      {criterion3, "worked examples"},
      {criterion4, "generator matrix certification"},
      {criterion5, "node-splitting soundness"},
      {criterion6, "pipeline dominance"},
      {criterion7, "gradient correctness"},
      {criterion8, "desk-scale learning"},
      {criterion9, "baseline sanity"},
      {criterion10, "determinism"},
  };

  std::set<int> only;
  if (const char* sel = std::getenv("TIM_ACCEPT_ONLY")) {
    std::istringstream in(sel);
    std::string tok;
    while (std::getline(in, tok, ','))
      if (!tok.empty()) only.insert(std::atoi(tok.c_str()));
  }

  int failures = 0;
  for (int i = 0; i < 10; ++i) {
    if (!only.empty() && only.count(i + 1) == 0) continue;
    std::string detail;
    bool pass = false;
    try {
      pass = criteria[i].first(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    if (!pass) ++failures;
    std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << (i + 1) << " ("
              << criteria[i].second << "): " << detail << std::endl;
  }
  if (only.empty())
    std::cout << "acceptance: " << (10 - failures) << "/10 criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
