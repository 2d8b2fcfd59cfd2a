#include <doctest.h>

#include <cmath>
#include <sstream>

#include "qdaa/io.hpp"
#include "qdaa/render.hpp"
#include "support.hpp"

using namespace qdaa;

namespace {

BiochemicalSystem zero_system() {
  return test::make_system(2, {{}, {}}, {test::unit_axis(2), test::unit_axis(2)});
}

RunConfig small_cfg(std::uint64_t seed = 5) {
  RunConfig cfg;
  cfg.kappa = 3;
  cfg.sims_per_tile = 10;
  cfg.seed = seed;
  cfg.integrator.step = 1e-2;
  cfg.integrator.t_max = 2.0;
  return cfg;
}

BiochemicalSystem strip_system(int cells) {
  return test::make_system(2, {{{1.0, {}}}, {}}, {test::unit_axis(cells), test::unit_axis(1)});
}

int count_occurrences(const std::string& text, const std::string& needle) {
  int count = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1))
    ++count;
  return count;
}

}  // namespace

TEST_CASE("automaton serialization round trip") {
  const BiochemicalSystem sys = builtin_model("oscillatory");
  RunConfig cfg = small_cfg();
  cfg.kappa = 4;
  cfg.integrator.step = 5e-4;
  cfg.integrator.t_max = 10.0;
  cfg.backward_refine = true;
  const Qdaa a = build_reachable(sys, cfg);
  const std::string text = serialize_automaton(a);
  const Qdaa b = parse_automaton(text);
  CHECK(b.state_count() == a.state_count());
  CHECK(b.initial == a.initial);
  CHECK(b.model_hash == a.model_hash);
  CHECK(b.config == a.config);
  CHECK(b.partition == a.partition);
  // re-serialization is byte identical, so every weight round-tripped exactly
  CHECK(serialize_automaton(b) == text);
}

TEST_CASE("round trip of an automaton with sink transitions") {
  const Qdaa a = build_reachable(strip_system(3), small_cfg());
  const std::string text = serialize_automaton(a);
  CHECK(text.find(" sink ") != std::string::npos);
  const Qdaa b = parse_automaton(text);
  CHECK(b.adjacency[b.state_count() - 1][0].dst == b.sink_id());
  CHECK(serialize_automaton(b) == text);
}

TEST_CASE("parse_automaton rejects corrupt input") {
  CHECK_THROWS_WITH_AS(parse_automaton("not an automaton"), doctest::Contains("bad header"),
                       std::runtime_error);
  const Qdaa a = build_reachable(zero_system(), small_cfg());
  std::string text = serialize_automaton(a);
  text.replace(text.find("state 0"), 7, "state 9");
  CHECK_THROWS_AS(parse_automaton(text), std::runtime_error);
}

TEST_CASE("dot export of the zero-field automaton has two nodes and two edges") {
  const Qdaa a = build_reachable(zero_system(), small_cfg());
  const std::string dot = export_dot(a);
  CHECK(count_occurrences(dot, "label=\"(") == 2);
  CHECK(count_occurrences(dot, "->") == 2);
  CHECK(dot.find("sink") == std::string::npos);  // unused sink is omitted
}

TEST_CASE("dot export shows the sink when it absorbs flow") {
  const Qdaa a = build_reachable(strip_system(2), small_cfg());
  const std::string dot = export_dot(a);
  CHECK(dot.find("sink") != std::string::npos);
}

TEST_CASE("csv export and round trip") {
  const BiochemicalSystem sys = builtin_model("oscillatory");
  RunConfig cfg = small_cfg(11);
  cfg.kappa = 4;
  cfg.integrator.step = 5e-4;
  cfg.integrator.t_max = 10.0;
  const Qdaa a = build_reachable(sys, cfg);
  const std::string csv = export_csv(a);

  SUBCASE("per-source weights sum to one") {
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);  // comment header
    std::getline(in, line);  // column header
    std::map<int, double> sums;
    while (std::getline(in, line)) {
      std::istringstream row(line);
      std::string src, dst, w;
      std::getline(row, src, ',');
      std::getline(row, dst, ',');
      std::getline(row, w, ',');
      sums[std::stoi(src)] += std::stod(w);
    }
    for (const auto& [src, sum] : sums) CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("re-import reproduces first-passage intensities") {
    const Qdaa b = import_csv(csv);
    for (const auto& [rect, fpi] : first_passage_by_rectangle(a)) {
      CHECK(first_passage_intensity(b, rect) == doctest::Approx(fpi).epsilon(1e-12));
    }
  }
}

TEST_CASE("run report echoes the configuration that reproduces the build") {
  const BiochemicalSystem sys = builtin_model("oscillatory");
  RunConfig cfg = small_cfg(21);
  cfg.kappa = 4;
  cfg.integrator.step = 5e-4;
  const Qdaa a = build_reachable(sys, cfg);
  const RunReport report = make_report(a);
  CHECK(report.states == static_cast<std::uint64_t>(a.state_count()));
  CHECK(report.rectangles == memory_stats(a).rectangles);

  // feeding the echoed config back reproduces the identical automaton bytes
  const Qdaa again = build_reachable(sys, report.config);
  CHECK(serialize_automaton(again) == serialize_automaton(a));

  const std::string text = format_report(report);
  CHECK(text.find("kappa") != std::string::npos);
  CHECK(text.find("seed") != std::string::npos);
  const std::string json = report_to_json(report);
  CHECK(json.find("\"kappa\": 4") != std::string::npos);
}

TEST_CASE("svg render") {
  const BiochemicalSystem sys = builtin_model("oscillatory");
  RunConfig cfg = small_cfg(2);
  cfg.kappa = 4;
  cfg.integrator.step = 5e-4;
  cfg.integrator.t_max = 10.0;
  cfg.backward_refine = true;
  const Qdaa a = build_reachable(sys, cfg);
  const std::string svg = render_svg(a, 0, 1);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("fill-opacity=\"1\"") != std::string::npos);  // initial cell has intensity 1

  // every opacity lies in [0, 1]
  std::size_t pos = 0;
  while ((pos = svg.find("fill-opacity=\"", pos)) != std::string::npos) {
    pos += 14;
    const double v = std::stod(svg.substr(pos, svg.find('"', pos) - pos));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK_THROWS_AS(render_svg(a, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(render_svg(a, 0, 5), std::invalid_argument);
}
