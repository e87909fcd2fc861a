#include <tim/json_io.hpp>
#include <tim/solve.hpp>

#include <iostream>

using namespace tim;

namespace {

void report(const char* label, const Scheme& s) {
  std::cout << "  " << label << ": K=" << s.K << " r=" << s.r << " b=" << s.b
            << " x=" << s.x << " d_sym=" << s.d_sym.str()
            << (s.certified ? " (certified)" : " (NOT certified)") << "\n";
}

}  // namespace

int main() {
  // Five unicast pairs on a ring: each source also reaches the next
  // destination, so the conflict graph is a directed 5-cycle.
  TopologyInstance topo;
  topo.num_sources = 5;
  topo.num_destinations = 5;
  for (int i = 0; i < 5; ++i) {
    topo.links.emplace_back(i, i);
    topo.demands.emplace_back(i, i);
    topo.links.emplace_back(i, (i + 1) % 5);
  }
  topo.canonicalize();
  topo.validate();

  const ConflictGraph g = build_conflict_graph(topo);
  std::cout << "five-pair ring network: " << g.num_nodes << " messages, "
            << g.edges.size() << " conflicts\n";

  const ChromaticResult chrom = exact_chromatic(g);
  std::cout << "  chromatic number " << chrom.chi() << ", local chromatic number "
            << brute_local_chromatic(g) << "\n";

  Scheme tdma = tdma_scheme(g, chrom.witness.colors, &topo);
  report("TDMA", tdma);

  const auto local = exact_local_coloring(g, 3, 2);
  Scheme osia = osia_scheme(g, *local, &topo);
  report("OSIA", osia);
  std::cout << "  scheduling needs three colors, but every destination hears at"
               " most two, so\n  alignment over a 2-dimensional signal space"
               " beats the schedule\n\n";

  // Directed triangle pointing into a sink. The underlying graph is K4, so
  // proper colorings cannot beat 1/4, but a rank-3 placeholder assignment
  // delivers 1/3.
  ConflictGraph k4;
  k4.num_nodes = 4;
  k4.edges = {{0, 1}, {1, 2}, {2, 0}, {0, 3}, {1, 3}, {2, 3}};
  k4.canonicalize();
  k4.validate();

  std::cout << "cycle-with-sink: " << k4.num_nodes << " messages, chromatic number "
            << exact_chromatic(k4).chi() << "\n";
  Scheme flat = tdma_scheme(k4, exact_chromatic(k4).witness.colors, nullptr);
  report("TDMA", flat);

  const auto values = exact_matrix_assignment(k4, 3);
  Scheme ssia = ssia_scheme(k4, *values, 3, nullptr);
  report("SSIA", ssia);
  std::cout << "  no rank-2 assignment exists: "
            << (exact_matrix_assignment(k4, 2) ? "found one?!" : "confirmed") << "\n\n";

  std::cout << "SSIA scheme as JSON:\n"
            << scheme_to_json(ssia, k4, "cycle-with-sink").dump(2) << "\n";
  return 0;
}
