#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tim/graph.hpp"
#include "tim/rational.hpp"
#include "tim/verify.hpp"

namespace tim {

using ordered_json = nlohmann::ordered_json;

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("short write: " + path);
}

inline ordered_json graph_to_json(const ConflictGraph& g) {
  ConflictGraph c = g;
  c.canonicalize();
  ordered_json j;
  j["num_nodes"] = c.num_nodes;
  j["directed"] = true;
  ordered_json edges = ordered_json::array();
  for (const auto& [u, v] : c.edges) edges.push_back(ordered_json::array({u, v}));
  j["edges"] = edges;
  return j;
}

inline ConflictGraph graph_from_json(const ordered_json& j) {
  ConflictGraph g;
  g.num_nodes = j.at("num_nodes").get<int>();
  if (!j.at("directed").get<bool>())
    throw std::invalid_argument("graph_from_json: undirected graphs unsupported");
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 2)
      throw std::invalid_argument("graph_from_json: malformed edge");
    g.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  g.canonicalize();
  g.validate();
  return g;
}

inline ordered_json topology_to_json(const TopologyInstance& t) {
  TopologyInstance c = t;
  c.canonicalize();
  ordered_json j;
  j["num_sources"] = c.num_sources;
  j["num_destinations"] = c.num_destinations;
  ordered_json links = ordered_json::array();
  for (const auto& [s, d] : c.links) links.push_back(ordered_json::array({s, d}));
  j["links"] = links;
  ordered_json demands = ordered_json::array();
  for (const auto& [s, d] : c.demands) demands.push_back(ordered_json::array({s, d}));
  j["demands"] = demands;
  return j;
}

inline TopologyInstance topology_from_json(const ordered_json& j) {
  TopologyInstance t;
  t.num_sources = j.at("num_sources").get<int>();
  t.num_destinations = j.at("num_destinations").get<int>();
  for (const auto& e : j.at("links")) t.links.emplace_back(e[0].get<int>(), e[1].get<int>());
  for (const auto& e : j.at("demands")) t.demands.emplace_back(e[0].get<int>(), e[1].get<int>());
  t.canonicalize();
  t.validate();
  return t;
}

/// One dataset instance. chi is absent until labeling; exact labels keep
/// chi_lower == chi_upper == chi, budget-exceeded instances carry the bounds
/// and labeled=false.
struct ManifestRecord {
  std::string id;
  std::optional<int> chi;
  std::string family;
  std::uint64_t seed = 0;
  ConflictGraph graph;
  std::optional<TopologyInstance> topology;
  bool labeled = false;
  std::optional<int> chi_lower, chi_upper;
};

inline ordered_json manifest_record_to_json(const ManifestRecord& r) {
  ordered_json j;
  j["id"] = r.id;
  if (r.chi.has_value())
    j["chi"] = *r.chi;
  else
    j["chi"] = nullptr;
  j["family"] = r.family;
  j["seed"] = r.seed;
  j["graph"] = graph_to_json(r.graph);
  if (r.topology.has_value()) j["topology"] = topology_to_json(*r.topology);
  if (r.labeled) {
    j["labeled"] = true;
  } else if (r.chi_lower.has_value()) {
    j["labeled"] = false;
    j["chi_lower"] = *r.chi_lower;
    j["chi_upper"] = *r.chi_upper;
  }
  return j;
}

inline ManifestRecord manifest_record_from_json(const ordered_json& j) {
  ManifestRecord r;
  r.id = j.at("id").get<std::string>();
  if (!j.at("chi").is_null()) r.chi = j.at("chi").get<int>();
  r.family = j.at("family").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.graph = graph_from_json(j.at("graph"));
  if (j.contains("topology")) r.topology = topology_from_json(j.at("topology"));
  if (j.contains("labeled")) r.labeled = j.at("labeled").get<bool>();
  if (j.contains("chi_lower")) r.chi_lower = j.at("chi_lower").get<int>();
  if (j.contains("chi_upper")) r.chi_upper = j.at("chi_upper").get<int>();
  return r;
}

inline void write_manifest(const std::string& path, const std::vector<ManifestRecord>& recs) {
  std::ostringstream out;
  for (const auto& r : recs) out << manifest_record_to_json(r).dump() << "\n";
  write_text_file(path, out.str());
}

inline std::vector<ManifestRecord> read_manifest(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::vector<ManifestRecord> recs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    recs.push_back(manifest_record_from_json(ordered_json::parse(line)));
  }
  return recs;
}

inline ordered_json scheme_to_json(const Scheme& s, const ConflictGraph& g,
                                   const std::string& instance_id = "") {
  ordered_json j;
  j["mode"] = scheme_mode_name(s.mode);
  j["K"] = s.K;
  j["r"] = s.r;
  j["b"] = s.b;
  j["x"] = s.x;
  ordered_json assign = ordered_json::object();
  for (std::size_t i = 0; i < s.assignment.size(); ++i)
    assign[std::to_string(i)] = s.assignment[i];
  j["assignment"] = assign;
  ordered_json vecs = ordered_json::array();
  for (const auto& v : s.family.vectors) vecs.push_back(v);
  j["vectors"] = vecs;
  j["d_sym"] = s.d_sym.str();
  j["certified"] = s.certified;
  if (!instance_id.empty()) j["instance_id"] = instance_id;
  j["graph"] = graph_to_json(g);
  return j;
}

inline std::pair<Scheme, ConflictGraph> scheme_from_json(const ordered_json& j) {
  Scheme s;
  s.mode = scheme_mode_from_name(j.at("mode").get<std::string>());
  s.K = j.at("K").get<int>();
  s.r = j.at("r").get<int>();
  s.b = j.at("b").get<int>();
  s.x = j.at("x").get<int>();
  const auto& assign = j.at("assignment");
  s.assignment.resize(assign.size());
  for (auto it = assign.begin(); it != assign.end(); ++it) {
    const int node = std::stoi(it.key());
    if (node < 0 || node >= static_cast<int>(s.assignment.size()))
      throw std::invalid_argument("scheme_from_json: bad assignment key");
    s.assignment[node] = it.value().get<std::vector<int>>();
  }
  for (const auto& v : j.at("vectors"))
    s.family.vectors.push_back(v.get<std::vector<std::int64_t>>());
  s.family.dim = s.family.vectors.empty() ? 0 : static_cast<int>(s.family.vectors[0].size());
  s.d_sym = Rational::parse(j.at("d_sym").get<std::string>());
  s.certified = j.at("certified").get<bool>();
  ConflictGraph g = graph_from_json(j.at("graph"));
  return {s, g};
}

inline std::string format_double(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

/// One evaluation outcome row. Rows are sorted by (dataset, method,
/// instance_id) before writing so identical runs produce identical bytes.
struct ResultRow {
  std::string dataset;
  std::string method;
  std::string instance_id;
  bool success = false;
  int K = 0, r = 0, b = 0, x = 0;
  Rational d_sym{0, 1};
  double wall_time_s = 0.0;
  std::uint64_t seed = 0;
};

inline std::string results_csv(std::vector<ResultRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.dataset, a.method, a.instance_id) <
           std::tie(b.dataset, b.method, b.instance_id);
  });
  std::ostringstream out;
  out << "dataset,method,instance_id,success,K,r,b,x,d_sym,wall_time_s,seed\n";
  for (const auto& r : rows) {
    out << r.dataset << ',' << r.method << ',' << r.instance_id << ',' << (r.success ? 1 : 0)
        << ',' << r.K << ',' << r.r << ',' << r.b << ',' << r.x << ',' << r.d_sym.str() << ','
        << format_double(r.wall_time_s) << ',' << r.seed << "\n";
  }
  return out.str();
}

inline std::vector<ResultRow> results_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) ||
      line != "dataset,method,instance_id,success,K,r,b,x,d_sym,wall_time_s,seed")
    throw std::invalid_argument("results_from_csv: bad header");
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string f[11];
    for (int i = 0; i < 11; ++i)
      if (!std::getline(ls, f[i], i == 10 ? '\n' : ','))
        throw std::invalid_argument("results_from_csv: short row");
    ResultRow r;
    r.dataset = f[0];
    r.method = f[1];
    r.instance_id = f[2];
    r.success = f[3] == "1";
    r.K = std::stoi(f[4]);
    r.r = std::stoi(f[5]);
    r.b = std::stoi(f[6]);
    r.x = std::stoi(f[7]);
    r.d_sym = Rational::parse(f[8]);
    r.wall_time_s = std::stod(f[9]);
    r.seed = std::stoull(f[10]);
    rows.push_back(r);
  }
  return rows;
}

struct CurvePoint {
  int iteration = 0;
  double mean_reward = 0.0;
  double success_ratio = 0.0;
  double entropy = 0.0;
};

inline std::string curve_csv(const std::vector<CurvePoint>& pts) {
  std::ostringstream out;
  out << "iteration,mean_reward,success_ratio,entropy\n";
  for (const auto& p : pts)
    out << p.iteration << ',' << format_double(p.mean_reward, 9) << ','
        << format_double(p.success_ratio, 9) << ',' << format_double(p.entropy, 9) << "\n";
  return out.str();
}

}  // namespace tim
