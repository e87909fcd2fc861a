#include <tim/generators.hpp>
#include <tim/ppo.hpp>
#include <tim/solve.hpp>

#include <iostream>
#include <memory>
#include <vector>

using namespace tim;

int main() {
  // A small pool of random networks, labeled and filtered to one alphabet.
  std::vector<ConflictGraph> pool;
  int chi = 0;
  for (int i = 0; i < 24 && static_cast<int>(pool.size()) < 12; ++i) {
    GenSpec spec;
    spec.family = GraphFamily::ER;
    spec.num_sources = 6;
    spec.num_destinations = 6;
    spec.params["p"] = 0.3;
    spec.q = 0.5;
    spec.seed = derive_seed(2024, seed_purpose::kGenerate, i);
    const GenResult gen = generate(spec);
    const LabelOutcome label = label_instance(gen.graph);
    if (!label.labeled) continue;
    if (chi == 0) chi = label.chi;
    if (label.chi == chi) pool.push_back(gen.graph);
  }
  std::cout << "training pool: " << pool.size() << " instances, chi=" << chi << "\n";

  EnvConfig env;
  env.mode = EnvMode::coloring;
  env.K = chi;
  env.r = chi;
  env.B = 8;

  TrainConfig tc;
  tc.iterations = 40;
  tc.rollouts_per_iter = 8;
  tc.hidden = 16;
  tc.layers = 2;
  tc.seed = 7;

  const TrainResult res = train(pool, env, tc, [](const CurvePoint& pt) {
    if (pt.iteration % 10 == 0)
      std::cout << "  iter " << pt.iteration << " reward " << pt.mean_reward
                << " success " << pt.success_ratio << "\n";
  });
  if (res.diverged) {
    std::cout << "training diverged\n";
    return 1;
  }

  const PolicyFn trained =
      make_network_policy(std::make_shared<const PolicyParams>(res.params));
  const PolicyFn random = make_random_policy();
  int trained_hits = 0, random_hits = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const std::uint64_t s = derive_seed(99, seed_purpose::kEval, i);
    trained_hits += evaluate_best_of_n(pool[i], trained, env, 5, s).success ? 1 : 0;
    random_hits += evaluate_best_of_n(pool[i], random, env, 5, s).success ? 1 : 0;
  }
  std::cout << "best-of-5 success: trained " << trained_hits << "/" << pool.size()
            << ", random " << random_hits << "/" << pool.size() << "\n";
  return 0;
}
