#ifndef QDAA_IO_HPP
#define QDAA_IO_HPP

#include <string>

#include "qdaa/automaton.hpp"
#include "qdaa/rats.hpp"

namespace qdaa {

/// Versioned text serialization of an automaton: header with the model hash
/// and the full run configuration, threshold tables, state table, transition
/// table. Byte-stable for identical builds; numbers round-trip exactly.
std::string serialize_automaton(const Qdaa& automaton);
Qdaa parse_automaton(const std::string& text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

/// Weighted digraph with one node per state, labelled
/// "(rect | entry)" where entry is H, the empty-set sign, or facet+tile count.
std::string export_dot(const Qdaa& automaton);

/// One transition per row: src, dst, weight, src_rect, dst_rect. A comment
/// header keeps the initial states and the sink id so the chain can be
/// re-imported.
std::string export_csv(const Qdaa& automaton);

/// Rebuilds the chain structure (states carry rectangles only) from
/// export_csv output; enough to re-run first-passage analyses.
Qdaa import_csv(const std::string& text);

struct RunReport {
  std::string model_name;
  std::string model_hash;
  RunConfig config;
  std::uint64_t states = 0;
  std::uint64_t transitions = 0;
  std::uint64_t rectangles = 0;
  double rho = 0.0;
  std::vector<std::string> variables;
  std::vector<std::pair<double, double>> bounds;
  BuildStats stats;
};

RunReport make_report(const Qdaa& automaton);
std::string format_report(const RunReport& report);       // aligned text
std::string report_to_json(const RunReport& report);

}  // namespace qdaa

#endif  // QDAA_IO_HPP
