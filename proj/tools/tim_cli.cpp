#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tim/generators.hpp"
#include "tim/json_io.hpp"
#include "tim/ppo.hpp"
#include "tim/solve.hpp"

namespace fs = std::filesystem;
using namespace tim;

namespace {

std::string path_stem(const std::string& p) { return fs::path(p).stem().string(); }

std::string padded_index(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d", i);
  return buf;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct MethodSpec {
  enum class Kind { SLI, TabuCol, LCG, TDMA, OSIA, OVIA, SSIA, SVIA };
  Kind kind = Kind::SLI;
  int b = 1;
  std::string token;
};

MethodSpec parse_method(const std::string& tok) {
  MethodSpec m;
  m.token = tok;
  if (tok == "SLI") {
    m.kind = MethodSpec::Kind::SLI;
  } else if (tok == "TabuCol") {
    m.kind = MethodSpec::Kind::TabuCol;
  } else if (tok == "LCG") {
    m.kind = MethodSpec::Kind::LCG;
  } else if (tok == "TDMA") {
    m.kind = MethodSpec::Kind::TDMA;
  } else if (tok == "OSIA") {
    m.kind = MethodSpec::Kind::OSIA;
  } else if (tok == "SSIA") {
    m.kind = MethodSpec::Kind::SSIA;
  } else if (tok.rfind("OVIA-", 0) == 0 || tok.rfind("SVIA-", 0) == 0) {
    m.kind = tok[0] == 'O' ? MethodSpec::Kind::OVIA : MethodSpec::Kind::SVIA;
    m.b = std::stoi(tok.substr(5));
    if (m.b < 1) throw CLI::ValidationError("methods", "vector order must be >= 1 in " + tok);
  } else {
    throw CLI::ValidationError(
        "methods", "unknown method " + tok +
                       " (expected SLI|TabuCol|LCG|TDMA|OSIA|OVIA-<b>|SSIA|SVIA-<b>)");
  }
  return m;
}

std::vector<MethodSpec> parse_methods(const std::string& csv) {
  std::vector<MethodSpec> out;
  std::string tok;
  std::istringstream in(csv);
  while (std::getline(in, tok, ','))
    if (!tok.empty()) out.push_back(parse_method(tok));
  if (out.empty()) throw CLI::ValidationError("methods", "empty method list");
  return out;
}

struct LoadedCheckpoint {
  std::shared_ptr<const PolicyParams> params;
  EnvConfig env;
};

LoadedCheckpoint load_policy_checkpoint(const std::string& path) {
  auto [params, env] = load_checkpoint(path);
  LoadedCheckpoint out;
  out.params = std::make_shared<const PolicyParams>(std::move(params));
  out.env = env;
  return out;
}

/// Shared policy selection: a checkpoint wins over the named fallback.
PolicyFn resolve_policy(const std::optional<LoadedCheckpoint>& ckpt, const std::string& name,
                        double rho) {
  if (ckpt.has_value()) return make_network_policy(ckpt->params);
  if (name == "random") return make_random_policy();
  if (name == "greedy") return make_greedy_defer_policy(rho);
  if (name == "exact") return make_exact_policy();
  throw CLI::ValidationError("policy", "unknown policy " + name +
                                           " (expected random|greedy|exact)");
}

ResultRow scheme_row(const std::string& dataset, const std::string& method,
                     const std::string& id, const SolveOutcome& so, std::uint64_t seed) {
  ResultRow row;
  row.dataset = dataset;
  row.method = method;
  row.instance_id = id;
  row.seed = seed;
  row.success = so.success;
  if (so.success) {
    row.K = so.scheme.K;
    row.r = so.scheme.r;
    row.b = so.scheme.b;
    row.x = so.scheme.x;
    row.d_sym = so.scheme.d_sym;
  }
  return row;
}

/// Recovers a chi-coloring witness for a labeled instance: greedy if it is
/// already optimal, TabuCol next, exact search as the last resort.
std::optional<std::vector<int>> chi_witness(const ConflictGraph& g, int chi, int tabu_iters,
                                            std::uint64_t seed) {
  const Coloring greedy = greedy_sli(g);
  if (greedy.num_colors == chi) return greedy.colors;
  if (const auto c = tabucol(g, chi, tabu_iters, 7, seed)) return c->colors;
  const ChromaticResult exact = exact_chromatic(g);
  if (exact.exact && exact.witness.num_colors == chi) return exact.witness.colors;
  return std::nullopt;
}

void write_scheme_file(const std::string& dir, const std::string& id,
                       const std::string& method, const Scheme& s, const ConflictGraph& g) {
  if (dir.empty()) return;
  fs::create_directories(dir);
  const fs::path file = fs::path(dir) / (id + "-" + method + ".json");
  write_text_file(file.string(), scheme_to_json(s, g, id).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// gen

struct GenOpts {
  std::string family;
  std::string out;
  int count = 100;
  int sources = 15, destinations = 15, nodes = 50;
  double p = 0.2, q = 0.2, p_new = 0.2, threshold = -1.0;
  int maxdeg = 6, m = 7;
  bool percentile = false;
  double area = -1.0, exponent = -1.0, breakpoint = -1.0;
  std::uint64_t seed = 1;
};

int run_gen(const GenOpts& o) {
  const GraphFamily fam = family_from_name(o.family);
  std::vector<ManifestRecord> recs;
  recs.reserve(o.count);
  for (int i = 0; i < o.count; ++i) {
    GenSpec spec;
    spec.family = fam;
    spec.q = o.q;
    spec.seed = derive_seed(o.seed, seed_purpose::kGenerate, i);
    std::string size_tag;
    switch (fam) {
      case GraphFamily::ER:
        spec.num_sources = o.sources;
        spec.num_destinations = o.destinations;
        spec.params["p"] = o.p;
        size_tag = std::to_string(o.sources) + "x" + std::to_string(o.destinations);
        break;
      case GraphFamily::PA:
        spec.num_sources = o.sources;
        spec.num_destinations = o.destinations;
        spec.params["maxdeg"] = o.maxdeg;
        spec.params["p_new"] = o.p_new;
        size_tag = std::to_string(o.sources) + "x" + std::to_string(o.destinations);
        break;
      case GraphFamily::HH:
        spec.num_sources = o.sources;
        spec.num_destinations = o.destinations;
        spec.params["maxdeg"] = o.maxdeg;
        size_tag = std::to_string(o.sources) + "x" + std::to_string(o.destinations);
        break;
      case GraphFamily::GEO:
        spec.num_sources = o.nodes;
        spec.params["threshold"] = o.threshold > 0 ? o.threshold : 0.2;
        size_tag = std::to_string(o.nodes);
        break;
      case GraphFamily::BA:
        spec.num_sources = o.nodes;
        spec.params["m"] = o.m;
        size_tag = std::to_string(o.nodes);
        break;
      case GraphFamily::WirelessNet:
        spec.num_sources = o.nodes;
        spec.params["threshold"] = o.threshold > 0 ? o.threshold : 0.4;
        spec.params["percentile"] = o.percentile ? 1.0 : 0.0;
        if (o.area > 0) spec.params["area"] = o.area;
        if (o.exponent > 0) spec.params["exponent"] = o.exponent;
        if (o.breakpoint > 0) spec.params["breakpoint"] = o.breakpoint;
        size_tag = std::to_string(o.nodes) + "x" + std::to_string(o.nodes);
        break;
    }
    GenResult res = generate(spec);
    ManifestRecord rec;
    rec.id = family_name(fam) + "-" + size_tag + "-" + padded_index(i);
    rec.family = family_name(fam);
    rec.seed = spec.seed;
    rec.graph = std::move(res.graph);
    rec.topology = std::move(res.topology);
    recs.push_back(std::move(rec));
  }
  write_manifest(o.out, recs);
  std::cout << "wrote " << recs.size() << " instances to " << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// label

struct LabelOpts {
  std::string in, out;
  long budget = 50'000'000;
  int limit = 0;
};

int run_label(const LabelOpts& o) {
  auto recs = read_manifest(o.in);
  int attempted = 0, solved = 0, already = 0;
  for (auto& r : recs) {
    if (r.labeled) {
      ++already;
      continue;
    }
    if (o.limit > 0 && attempted >= o.limit) continue;
    ++attempted;
    const LabelOutcome lab = label_instance(r.graph, o.budget);
    r.chi_lower = lab.chi_lower;
    r.chi_upper = lab.chi_upper;
    if (lab.labeled) {
      r.labeled = true;
      r.chi = lab.chi;
      ++solved;
    }
  }
  const std::string out = o.out.empty() ? o.in : o.out;
  write_manifest(out, recs);
  const int labeled_total = already + solved;
  std::cout << "labeled " << solved << "/" << attempted << " attempted; coverage "
            << labeled_total << "/" << recs.size() << " ("
            << format_double(recs.empty() ? 0.0
                                          : static_cast<double>(labeled_total) / recs.size(),
                             4)
            << ")\n";
  std::map<int, int> hist;
  for (const auto& r : recs)
    if (r.labeled) ++hist[*r.chi];
  for (const auto& [chi, n] : hist) std::cout << "  chi=" << chi << ": " << n << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// baseline

struct BaselineOpts {
  std::string in, method = "sli", out, dataset;
  int iters = 1000, tenure = 7;
  std::uint64_t seed = 1;
  bool walltime = false;
};

int run_baseline(const BaselineOpts& o) {
  if (o.method != "sli" && o.method != "tabucol")
    throw CLI::ValidationError("method", "expected sli|tabucol");
  const auto recs = read_manifest(o.in);
  const std::string dataset = o.dataset.empty() ? path_stem(o.in) : o.dataset;
  std::vector<ResultRow> rows;
  int labeled = 0, optimal = 0;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& rec = recs[i];
    if (!rec.labeled) continue;
    ++labeled;
    const std::uint64_t s_i = derive_seed(o.seed, seed_purpose::kBaseline, i);
    const auto t0 = std::chrono::steady_clock::now();
    ResultRow row;
    row.dataset = dataset;
    row.instance_id = rec.id;
    row.seed = s_i;
    row.b = 1;
    if (o.method == "sli") {
      row.method = "SLI";
      const Coloring c = greedy_sli(rec.graph);
      row.success = c.num_colors == *rec.chi;
      row.K = row.r = row.x = c.num_colors;
      row.d_sym = Rational(1, std::max(c.num_colors, 1));
    } else {
      row.method = "TabuCol";
      const auto c = tabucol(rec.graph, *rec.chi, o.iters, o.tenure, s_i);
      row.success = c.has_value();
      if (c) {
        row.K = row.r = row.x = *rec.chi;
        row.d_sym = Rational(1, *rec.chi);
      }
    }
    if (o.walltime) row.wall_time_s = seconds_since(t0);
    optimal += row.success ? 1 : 0;
    rows.push_back(std::move(row));
  }
  write_text_file(o.out, results_csv(rows));
  std::cout << "wrote " << rows.size() << " rows to " << o.out << "\n";
  std::cout << "optimal_ratio "
            << format_double(labeled ? static_cast<double>(optimal) / labeled : 0.0, 4) << " ("
            << optimal << "/" << labeled << " labeled of " << recs.size() << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
  std::string in, out = "checkpoint.bin", curve, mode = "color";
  int chi = 0, K = 0, r = 0, limit = 0;
  int iterations = 1000, B = 32, rollouts = 20, epochs = 4, hidden = 128, layers = 4;
  double lr = 0.001, clip = 0.2, value_coeff = 0.5, entropy_coeff = 0.01;
  double gamma = 1.0, gae_lambda = 0.95, grad_clip = 0.2, alpha = 0.5, beta = 0.5;
  std::uint64_t seed = 1;
  bool quiet = false;
};

int run_train(const TrainOpts& o) {
  const auto recs = read_manifest(o.in);
  std::vector<ConflictGraph> graphs;
  for (const auto& rec : recs) {
    if (!rec.labeled) continue;
    if (o.chi > 0 && *rec.chi != o.chi) continue;
    graphs.push_back(rec.graph);
    if (o.limit > 0 && static_cast<int>(graphs.size()) >= o.limit) break;
  }
  if (graphs.empty()) throw std::runtime_error("train: no labeled instances match the filter");

  EnvConfig env;
  env.B = o.B;
  env.alpha = o.alpha;
  env.beta = o.beta;
  if (o.mode == "color") {
    env.mode = EnvMode::coloring;
    env.K = o.K > 0 ? o.K : o.chi;
    env.r = env.K;
    if (env.K < 1) throw CLI::ValidationError("K", "color mode needs --K or --chi");
  } else if (o.mode == "local") {
    env.mode = EnvMode::local_coloring;
    env.K = o.K > 0 ? o.K : o.chi;
    env.r = o.r;
    if (env.K < 1 || env.r < 1)
      throw CLI::ValidationError("r", "local mode needs --K (or --chi) and --r");
  } else if (o.mode == "subspace") {
    env.mode = EnvMode::matrix_rank_reduction;
    env.K = 0;
    env.r = o.r;
    if (env.r < 1) throw CLI::ValidationError("r", "subspace mode needs --r");
  } else {
    throw CLI::ValidationError("mode", "expected color|local|subspace");
  }

  TrainConfig tc;
  tc.iterations = o.iterations;
  tc.rollouts_per_iter = o.rollouts;
  tc.epochs_per_batch = o.epochs;
  tc.lr = o.lr;
  tc.clip_eps = o.clip;
  tc.value_coeff = o.value_coeff;
  tc.entropy_coeff = o.entropy_coeff;
  tc.gamma = o.gamma;
  tc.gae_lambda = o.gae_lambda;
  tc.grad_clip = o.grad_clip;
  tc.hidden = o.hidden;
  tc.layers = o.layers;
  tc.seed = o.seed;

  std::cout << "training on " << graphs.size() << " instances, alphabet " << env.alphabet()
            << ", " << tc.iterations << " iterations\n";
  const auto progress = [&](const CurvePoint& pt) {
    if (o.quiet || (pt.iteration % 25 != 0 && pt.iteration + 1 != tc.iterations)) return;
    std::cout << "iter " << pt.iteration << " reward " << format_double(pt.mean_reward, 4)
              << " success " << format_double(pt.success_ratio, 4) << " entropy "
              << format_double(pt.entropy, 4) << "\n";
  };
  const TrainResult res = train(graphs, env, tc, progress);
  save_checkpoint(o.out, res.params, env);
  if (!o.curve.empty()) write_text_file(o.curve, curve_csv(res.curve));
  std::cout << "checkpoint written to " << o.out << "\n";
  if (res.diverged) {
    std::cout << "warning: training aborted on non-finite loss after " << res.curve.size()
              << " iterations; checkpoint holds the last finite parameters\n";
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// solve

struct SolveOpts {
  std::string graph_file, checkpoint, policy = "greedy", out, id, mode = "color";
  int b = 2, r = 0, episodes = 20, B = 32;
  double rho = 0.9, alpha = 0.5, beta = 0.5;
  std::uint64_t seed = 1;
  bool b_set = false, r_set = false, B_set = false;
};

int run_solve(const SolveOpts& o) {
  const ordered_json j = ordered_json::parse(read_text_file(o.graph_file));
  ConflictGraph g;
  std::optional<TopologyInstance> topo;
  if (j.contains("num_sources")) {
    topo = topology_from_json(j);
    g = build_conflict_graph(*topo);
  } else {
    g = graph_from_json(j);
  }
  const TopologyInstance* topo_ptr = topo ? &*topo : nullptr;

  std::optional<LoadedCheckpoint> ckpt;
  if (!o.checkpoint.empty()) ckpt = load_policy_checkpoint(o.checkpoint);
  const PolicyFn pol = resolve_policy(ckpt, o.policy, o.rho);

  EnvConfig base;
  base.B = o.B;
  base.alpha = o.alpha;
  base.beta = o.beta;
  if (ckpt && !o.B_set) {
    base.B = ckpt->env.B;
    base.alpha = ckpt->env.alpha;
    base.beta = ckpt->env.beta;
  }

  SolveOutcome so;
  if (o.mode == "color") {
    so = solve_coloring(g, pol, base, o.episodes, o.seed, topo_ptr);
  } else if (o.mode == "local") {
    so = solve_osia(g, pol, base, o.episodes, o.seed, topo_ptr);
  } else if (o.mode == "fractional") {
    if (!o.b_set) throw CLI::ValidationError("b", "fractional mode needs --b");
    so = solve_ovia(g, o.b, pol, base, o.episodes, o.seed, topo_ptr);
  } else if (o.mode == "subspace") {
    if (!o.r_set) throw CLI::ValidationError("r", "subspace mode needs --r");
    so = solve_ssia(g, o.r, pol, base, o.episodes, o.seed, topo_ptr);
  } else if (o.mode == "svia") {
    if (!o.b_set) throw CLI::ValidationError("b", "svia mode needs --b");
    int r = o.r_set ? o.r : 0;
    if (r == 0) {
      const ConflictGraph split = node_splitting_graph(g, o.b);
      const SelectorResult sel =
          k_selector(split, EnvMode::local_coloring, pol, base, o.episodes,
                     derive_seed(o.seed, seed_purpose::kSelector, 2));
      r = sel.r;
      std::cout << "svia placeholder dimension from split-graph witness: r=" << r << "\n";
    }
    so = solve_svia(g, o.b, r, pol, base, o.episodes, o.seed, topo_ptr);
  } else {
    throw CLI::ValidationError("mode", "expected color|local|fractional|subspace|svia");
  }

  if (!so.success) {
    std::cout << "no certified scheme found (" << so.episodes << " episodes)\n";
    return 1;
  }
  if (!o.out.empty())
    write_text_file(o.out, scheme_to_json(so.scheme, g, o.id).dump(2) + "\n");
  std::cout << scheme_mode_name(so.scheme.mode) << " scheme: K=" << so.scheme.K
            << " r=" << so.scheme.r << " b=" << so.scheme.b << " x=" << so.scheme.x
            << " d_sym=" << so.scheme.d_sym.str() << " certified="
            << (so.scheme.certified ? "true" : "false") << " (" << so.episodes
            << " episodes)\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts {
  std::string in, methods = "SLI,TabuCol,TDMA", out, dataset, checkpoint, schemes_dir;
  std::string policy = "greedy";
  int n = 20, episodes = 20, iters = 1000, tenure = 7, B = 32, ssia_r = 0, svia_r = 0, chi = 0;
  double alpha = 0.5, beta = 0.5, rho = 0.9;
  std::uint64_t seed = 1;
  bool walltime = false, B_set = false;
};

int run_eval(const EvalOpts& o) {
  const auto methods = parse_methods(o.methods);
  for (const auto& m : methods)
    if (m.kind == MethodSpec::Kind::LCG && o.checkpoint.empty())
      throw CLI::ValidationError("checkpoint", "LCG needs --checkpoint");

  const auto recs = read_manifest(o.in);
  const std::string dataset = o.dataset.empty() ? path_stem(o.in) : o.dataset;
  std::optional<LoadedCheckpoint> ckpt;
  if (!o.checkpoint.empty()) ckpt = load_policy_checkpoint(o.checkpoint);
  const PolicyFn pol = resolve_policy(ckpt, o.policy, o.rho);

  EnvConfig base;
  base.B = o.B;
  base.alpha = o.alpha;
  base.beta = o.beta;
  if (ckpt && !o.B_set) {
    base.B = ckpt->env.B;
    base.alpha = ckpt->env.alpha;
    base.beta = ckpt->env.beta;
  }

  std::vector<ResultRow> rows;
  std::map<std::string, std::map<Rational, int>> dof_counts;
  std::map<std::string, std::pair<int, int>> ratio_counts;  // optimal, labeled
  int labeled = 0, skipped_filter = 0;

  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& rec = recs[i];
    if (o.chi > 0 && (!rec.labeled || *rec.chi != o.chi)) {
      ++skipped_filter;
      continue;
    }
    if (!rec.labeled) continue;
    ++labeled;
    const ConflictGraph& g = rec.graph;
    const TopologyInstance* topo = rec.topology ? &*rec.topology : nullptr;
    const int chi = *rec.chi;
    const std::uint64_t eval_seed = derive_seed(o.seed, seed_purpose::kEval, i);
    const std::uint64_t base_seed = derive_seed(o.seed, seed_purpose::kBaseline, i);

    for (const auto& m : methods) {
      const auto t0 = std::chrono::steady_clock::now();
      ResultRow row;
      row.dataset = dataset;
      row.method = m.token;
      row.instance_id = rec.id;
      row.b = 1;
      std::optional<Scheme> emitted;
      switch (m.kind) {
        case MethodSpec::Kind::SLI: {
          row.seed = base_seed;
          const Coloring c = greedy_sli(g);
          row.success = c.num_colors == chi;
          row.K = row.r = row.x = c.num_colors;
          row.d_sym = Rational(1, std::max(c.num_colors, 1));
          break;
        }
        case MethodSpec::Kind::TabuCol: {
          row.seed = base_seed;
          const auto c = tabucol(g, chi, o.iters, o.tenure, base_seed);
          row.success = c.has_value();
          if (c) {
            row.K = row.r = row.x = chi;
            row.d_sym = Rational(1, chi);
          }
          break;
        }
        case MethodSpec::Kind::LCG: {
          row.seed = eval_seed;
          EnvConfig cfg = base;
          cfg.mode = EnvMode::coloring;
          cfg.K = chi;
          cfg.r = chi;
          const BestOfN ev = evaluate_best_of_n(g, pol, cfg, o.n, eval_seed);
          row.success = ev.success;
          if (ev.success) {
            Scheme s = tdma_scheme(g, ev.best_state, topo);
            row.success = s.certified;
            row.K = s.K;
            row.r = s.r;
            row.x = s.x;
            row.d_sym = s.d_sym;
            emitted = std::move(s);
          }
          break;
        }
        case MethodSpec::Kind::TDMA: {
          row.seed = base_seed;
          const auto witness = chi_witness(g, chi, std::max(o.iters, 2000), base_seed);
          if (witness) {
            Scheme s = tdma_scheme(g, *witness, topo);
            row.success = s.certified;
            row.K = s.K;
            row.r = s.r;
            row.x = s.x;
            row.d_sym = s.d_sym;
            emitted = std::move(s);
          }
          break;
        }
        case MethodSpec::Kind::OSIA: {
          row.seed = eval_seed;
          const SolveOutcome so = solve_osia(g, pol, base, o.episodes, eval_seed, topo);
          row = scheme_row(dataset, m.token, rec.id, so, eval_seed);
          if (so.success) emitted = so.scheme;
          break;
        }
        case MethodSpec::Kind::OVIA: {
          row.seed = eval_seed;
          const SolveOutcome so = solve_ovia(g, m.b, pol, base, o.episodes, eval_seed, topo);
          row = scheme_row(dataset, m.token, rec.id, so, eval_seed);
          if (so.success) emitted = so.scheme;
          break;
        }
        case MethodSpec::Kind::SSIA: {
          row.seed = eval_seed;
          const int r_eff = o.ssia_r > 0 ? o.ssia_r : std::max(1, chi - 1);
          const SolveOutcome so = solve_ssia(g, r_eff, pol, base, o.episodes, eval_seed, topo);
          row = scheme_row(dataset, m.token, rec.id, so, eval_seed);
          if (so.success) emitted = so.scheme;
          break;
        }
        case MethodSpec::Kind::SVIA: {
          row.seed = eval_seed;
          int r_eff = o.svia_r;
          if (r_eff == 0) {
            const ConflictGraph split = node_splitting_graph(g, m.b);
            r_eff = k_selector(split, EnvMode::local_coloring, pol, base, o.episodes,
                               derive_seed(eval_seed, seed_purpose::kSelector, 2))
                        .r;
          }
          const SolveOutcome so =
              solve_svia(g, m.b, r_eff, pol, base, o.episodes, eval_seed, topo);
          row = scheme_row(dataset, m.token, rec.id, so, eval_seed);
          if (so.success) emitted = so.scheme;
          break;
        }
      }
      if (o.walltime) row.wall_time_s = seconds_since(t0);

      const bool coloring_method = m.kind == MethodSpec::Kind::SLI ||
                                   m.kind == MethodSpec::Kind::TabuCol ||
                                   m.kind == MethodSpec::Kind::LCG;
      if (coloring_method) {
        auto& rc = ratio_counts[m.token];
        rc.first += row.success ? 1 : 0;
        rc.second += 1;
      } else if (row.success) {
        ++dof_counts[m.token][row.d_sym];
      } else {
        dof_counts[m.token];
      }
      if (emitted && row.success) write_scheme_file(o.schemes_dir, rec.id, m.token, *emitted, g);
      rows.push_back(std::move(row));
    }
  }

  write_text_file(o.out, results_csv(rows));
  std::cout << "wrote " << rows.size() << " rows to " << o.out << "\n";
  std::cout << "coverage " << labeled << "/" << recs.size() - skipped_filter << " labeled";
  if (skipped_filter > 0) std::cout << " (" << skipped_filter << " filtered out)";
  std::cout << "\n";
  for (const auto& [method, rc] : ratio_counts)
    std::cout << method << " optimal_ratio "
              << format_double(rc.second ? static_cast<double>(rc.first) / rc.second : 0.0, 4)
              << " (" << rc.first << "/" << rc.second << ")\n";
  for (const auto& [method, counts] : dof_counts) {
    int total = 0;
    std::cout << method << " d_sym counts:";
    for (auto it = counts.rbegin(); it != counts.rend(); ++it) {
      std::cout << " " << it->first.str() << "=" << it->second;
      total += it->second;
    }
    if (total < labeled) std::cout << " none=" << labeled - total;
    std::cout << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// transfer

struct TransferOpts {
  std::vector<std::string> checkpoints, datasets;
  std::string out;
  int n = 20;
  std::uint64_t seed = 1;
};

int run_transfer(const TransferOpts& o) {
  struct Cell {
    std::string checkpoint, dataset, ratio, note;
    int instances = 0;
  };
  std::vector<Cell> cells;
  for (const auto& ck_path : o.checkpoints) {
    const LoadedCheckpoint ck = load_policy_checkpoint(ck_path);
    const PolicyFn pol = make_network_policy(ck.params);
    const int K = ck.env.K;
    for (const auto& ds_path : o.datasets) {
      const auto recs = read_manifest(ds_path);
      Cell cell;
      cell.checkpoint = path_stem(ck_path);
      cell.dataset = path_stem(ds_path);
      int used = 0, optimal = 0, unlabeled = 0;
      for (std::size_t i = 0; i < recs.size(); ++i) {
        const auto& rec = recs[i];
        if (!rec.labeled) {
          ++unlabeled;
          continue;
        }
        if (*rec.chi != K) continue;
        ++used;
        EnvConfig cfg = ck.env;
        cfg.mode = EnvMode::coloring;
        cfg.K = K;
        cfg.r = K;
        const BestOfN ev = evaluate_best_of_n(rec.graph, pol, cfg, o.n,
                                              derive_seed(o.seed, seed_purpose::kEval, i));
        optimal += ev.success ? 1 : 0;
      }
      cell.instances = used;
      if (used == 0) {
        cell.note = unlabeled == static_cast<int>(recs.size())
                        ? "skip: dataset unlabeled"
                        : "skip: alphabet mismatch, no labeled instances with chi=" +
                              std::to_string(K);
      } else {
        cell.ratio = format_double(static_cast<double>(optimal) / used, 6);
      }
      cells.push_back(std::move(cell));
    }
  }
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    return std::tie(a.checkpoint, a.dataset) < std::tie(b.checkpoint, b.dataset);
  });
  std::ostringstream csv;
  csv << "checkpoint,dataset,instances,ratio,note\n";
  for (const auto& c : cells)
    csv << c.checkpoint << ',' << c.dataset << ',' << c.instances << ',' << c.ratio << ','
        << c.note << "\n";
  write_text_file(o.out, csv.str());
  std::cout << "wrote " << cells.size() << " cells to " << o.out << "\n";
  for (const auto& c : cells)
    std::cout << c.checkpoint << " x " << c.dataset << ": "
              << (c.note.empty() ? c.ratio : c.note) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyOpts {
  std::string dir;
  std::vector<std::string> files;
};

int run_verify(const VerifyOpts& o) {
  std::vector<std::string> paths = o.files;
  if (!o.dir.empty()) {
    if (!fs::is_directory(o.dir)) throw std::runtime_error("not a directory: " + o.dir);
    for (const auto& e : fs::directory_iterator(o.dir))
      if (e.is_regular_file() && e.path().extension() == ".json")
        paths.push_back(e.path().string());
  }
  std::sort(paths.begin(), paths.end());
  int certified = 0, failed = 0;
  for (const auto& path : paths) {
    std::string status;
    try {
      auto [s, g] = scheme_from_json(ordered_json::parse(read_text_file(path)));
      s.certified = false;
      if (certify_scheme(g, s)) {
        status = "certified (" + scheme_mode_name(s.mode) + ", d_sym=" + s.d_sym.str() + ")";
        ++certified;
      } else {
        status = "UNCERTIFIED";
        ++failed;
      }
    } catch (const std::exception& ex) {
      status = std::string("parse error: ") + ex.what();
      ++failed;
    }
    std::cout << path << ": " << status << "\n";
  }
  std::cout << certified << "/" << paths.size() << " certified\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interference alignment schemes for one-hop networks via deferred coloring"};
  app.require_subcommand(1);

  GenOpts gen;
  auto* cg = app.add_subcommand("gen", "Generate a dataset manifest (JSONL)");
  cg->add_option("--family", gen.family, "er|pa|hh|geo|ba|wireless")->required();
  cg->add_option("--count", gen.count, "instances to generate");
  cg->add_option("--out", gen.out, "output manifest path")->required();
  cg->add_option("--sources", gen.sources, "source count (er/pa/hh)");
  cg->add_option("--destinations", gen.destinations, "destination count (er/pa/hh)");
  cg->add_option("--nodes", gen.nodes, "node count (geo/ba) or pair count (wireless)");
  cg->add_option("--p", gen.p, "link probability (er)");
  cg->add_option("--q", gen.q, "demand fraction of all source-destination pairs");
  cg->add_option("--maxdeg", gen.maxdeg, "max degree (pa/hh)");
  cg->add_option("--p-new", gen.p_new, "new-node probability (pa)");
  cg->add_option("--threshold", gen.threshold,
                 "distance threshold (geo) or link-survival threshold (wireless)");
  cg->add_option("--m", gen.m, "attachment count (ba)");
  cg->add_flag("--percentile", gen.percentile,
               "wireless: keep links strictly above the strength quantile instead of the "
               "densest fraction");
  cg->add_option("--area", gen.area, "wireless area side (m)");
  cg->add_option("--exponent", gen.exponent, "wireless far-field path loss exponent");
  cg->add_option("--breakpoint", gen.breakpoint, "wireless two-slope breakpoint distance (m)");
  cg->add_option("--seed", gen.seed, "master seed");

  LabelOpts label;
  auto* cl = app.add_subcommand("label", "Label instances with the exact chromatic number");
  cl->add_option("--in", label.in, "input manifest")->required();
  cl->add_option("--out", label.out, "output manifest (default: in place)");
  cl->add_option("--budget", label.budget, "search expansion budget per instance");
  cl->add_option("--limit", label.limit, "max unlabeled instances to attempt (0 = all)");

  BaselineOpts baseline;
  auto* cb = app.add_subcommand("baseline", "Classical coloring baselines over a dataset");
  cb->add_option("--in", baseline.in, "labeled manifest")->required();
  cb->add_option("--method", baseline.method, "sli|tabucol");
  cb->add_option("--out", baseline.out, "results CSV path")->required();
  cb->add_option("--dataset", baseline.dataset, "dataset name override for the CSV");
  cb->add_option("--iters", baseline.iters, "tabucol iteration budget");
  cb->add_option("--tenure", baseline.tenure, "tabucol tabu tenure");
  cb->add_option("--seed", baseline.seed, "master seed");
  cb->add_flag("--walltime", baseline.walltime, "record wall-clock seconds per row");

  TrainOpts tr;
  auto* ct = app.add_subcommand("train", "Train the deferral policy with PPO");
  ct->add_option("--in", tr.in, "labeled manifest")->required();
  ct->add_option("--chi", tr.chi, "train only on instances with this chromatic number");
  ct->add_option("--mode", tr.mode, "color|local|subspace");
  ct->add_option("--K", tr.K, "palette size (default: --chi)");
  ct->add_option("--r", tr.r, "locality bound / placeholder dimension");
  ct->add_option("--limit", tr.limit, "cap on training instances (0 = all)");
  ct->add_option("--out", tr.out, "checkpoint path");
  ct->add_option("--curve", tr.curve, "training curve CSV path");
  ct->add_option("--iterations", tr.iterations, "PPO iterations");
  ct->add_option("--B", tr.B, "episode horizon");
  ct->add_option("--rollouts", tr.rollouts, "episodes per iteration");
  ct->add_option("--epochs", tr.epochs, "update passes per batch");
  ct->add_option("--lr", tr.lr, "Adam learning rate");
  ct->add_option("--clip", tr.clip, "PPO clip epsilon");
  ct->add_option("--value-coeff", tr.value_coeff, "value loss coefficient");
  ct->add_option("--entropy-coeff", tr.entropy_coeff, "entropy bonus coefficient");
  ct->add_option("--gamma", tr.gamma, "discount");
  ct->add_option("--lambda", tr.gae_lambda, "GAE lambda");
  ct->add_option("--grad-clip", tr.grad_clip, "global gradient norm clip");
  ct->add_option("--hidden", tr.hidden, "trunk width");
  ct->add_option("--layers", tr.layers, "trunk depth");
  ct->add_option("--alpha", tr.alpha, "locality clean-up cutoff fraction");
  ct->add_option("--beta", tr.beta, "early-termination reward weight");
  ct->add_option("--seed", tr.seed, "master seed");
  ct->add_flag("--quiet", tr.quiet, "suppress progress lines");

  SolveOpts solve;
  auto* cs = app.add_subcommand("solve", "Solve one instance and emit a certified scheme");
  cs->add_option("--graph", solve.graph_file, "graph or topology JSON")->required();
  cs->add_option("--mode", solve.mode, "color|local|fractional|subspace|svia");
  auto* sb = cs->add_option("--b", solve.b, "vector order (fractional/svia)");
  auto* sr = cs->add_option("--r", solve.r,
                            "placeholder dimension (subspace; optional for svia)");
  auto* sB = cs->add_option("--B", solve.B, "episode horizon");
  cs->add_option("--checkpoint", solve.checkpoint, "policy checkpoint");
  cs->add_option("--policy", solve.policy, "fallback policy: random|greedy|exact");
  cs->add_option("--rho", solve.rho, "greedy policy assignment probability");
  cs->add_option("--episodes", solve.episodes, "episodes per palette setting");
  cs->add_option("--alpha", solve.alpha, "locality clean-up cutoff fraction");
  cs->add_option("--beta", solve.beta, "early-termination reward weight");
  cs->add_option("--out", solve.out, "scheme JSON path");
  cs->add_option("--id", solve.id, "instance id recorded in the scheme");
  cs->add_option("--seed", solve.seed, "master seed");

  EvalOpts ev;
  auto* ce = app.add_subcommand("eval", "Run a method table over a labeled dataset");
  ce->add_option("--in", ev.in, "labeled manifest")->required();
  ce->add_option("--methods", ev.methods,
                 "comma list: SLI,TabuCol,LCG,TDMA,OSIA,OVIA-<b>,SSIA,SVIA-<b>");
  ce->add_option("--out", ev.out, "results CSV path")->required();
  ce->add_option("--dataset", ev.dataset, "dataset name override for the CSV");
  ce->add_option("--checkpoint", ev.checkpoint, "policy checkpoint (required for LCG)");
  ce->add_option("--policy", ev.policy, "fallback policy: random|greedy|exact");
  ce->add_option("--rho", ev.rho, "greedy policy assignment probability");
  ce->add_option("--n", ev.n, "best-of-n episodes for LCG");
  ce->add_option("--episodes", ev.episodes, "episodes per palette setting (IA methods)");
  ce->add_option("--iters", ev.iters, "tabucol iteration budget");
  ce->add_option("--tenure", ev.tenure, "tabucol tabu tenure");
  auto* eB = ce->add_option("--B", ev.B, "episode horizon");
  ce->add_option("--alpha", ev.alpha, "locality clean-up cutoff fraction");
  ce->add_option("--beta", ev.beta, "early-termination reward weight");
  ce->add_option("--ssia-r", ev.ssia_r, "SSIA placeholder dimension (default chi-1)");
  ce->add_option("--svia-r", ev.svia_r,
                 "SVIA placeholder dimension (default: split-graph witness)");
  ce->add_option("--chi", ev.chi, "only evaluate instances with this chromatic number");
  ce->add_option("--schemes-dir", ev.schemes_dir, "emit per-instance scheme JSON here");
  ce->add_option("--seed", ev.seed, "master seed");
  ce->add_flag("--walltime", ev.walltime, "record wall-clock seconds per row");

  TransferOpts tf;
  auto* cx = app.add_subcommand("transfer", "Cross-dataset optimal-ratio matrix");
  cx->add_option("--checkpoint", tf.checkpoints, "policy checkpoint (repeatable)")->required();
  cx->add_option("--in", tf.datasets, "labeled manifest (repeatable)")->required();
  cx->add_option("--out", tf.out, "transfer CSV path")->required();
  cx->add_option("--n", tf.n, "best-of-n episodes per instance");
  cx->add_option("--seed", tf.seed, "master seed");

  VerifyOpts vf;
  auto* cv = app.add_subcommand("verify", "Re-certify scheme files");
  cv->add_option("--dir", vf.dir, "directory of scheme JSON files");
  cv->add_option("--file", vf.files, "scheme JSON file (repeatable)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cg->parsed()) return run_gen(gen);
    if (cl->parsed()) return run_label(label);
    if (cb->parsed()) return run_baseline(baseline);
    if (ct->parsed()) return run_train(tr);
    if (cs->parsed()) {
      solve.b_set = sb->count() > 0;
      solve.r_set = sr->count() > 0;
      solve.B_set = sB->count() > 0;
      return run_solve(solve);
    }
    if (ce->parsed()) {
      ev.B_set = eB->count() > 0;
      return run_eval(ev);
    }
    if (cx->parsed()) return run_transfer(tf);
    if (cv->parsed()) return run_verify(vf);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
  return 0;
}
