// qdaa: build quantitative discrete approximation automata of multi-affine
// biochemical systems and run reachability analyses on them.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "qdaa/io.hpp"
#include "qdaa/render.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParse = 1;
constexpr int kExitSimulation = 2;

std::map<std::string, double> parse_constants_file(const std::string& path) {
  std::map<std::string, double> constants;
  std::istringstream in(qdaa::read_file(path));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string name, eq;
    double value;
    if (!(ls >> name)) continue;
    if (!(ls >> eq >> value) || eq != "=")
      throw qdaa::ParseError(lineno, 1, "expected 'name = value' in constants file");
    constants[name] = value;
  }
  return constants;
}

qdaa::BiochemicalSystem load_model(const std::string& model_arg, const std::string& constants_path) {
  std::map<std::string, double> constants;
  if (!constants_path.empty()) constants = parse_constants_file(constants_path);
  const bool is_builtin =
      (model_arg == "oscillatory" || model_arg == "enzyme" || model_arg == "ecoli") &&
      !std::filesystem::exists(model_arg);
  if (is_builtin) return qdaa::builtin_model(model_arg, constants);
  if (!constants_path.empty())
    std::cerr << "note: --constants only affects builtin models; ignored for model files\n";
  qdaa::BiochemicalSystem system = qdaa::parse_model(qdaa::read_file(model_arg));
  if (system.name.empty()) system.name = std::filesystem::path(model_arg).stem().string();
  return system;
}

struct ConfigFlags {
  int kappa = 8;
  int sims = 50;
  double tmax = 0.0;   // 0: keep the default horizon
  double step = 0.0;   // 0: derive from the system
  std::uint64_t seed = 0;
  bool backward = false;
  int subgrid = 10;
  int threads = 0;     // 0: hardware concurrency
};

void add_config_flags(CLI::App* cmd, ConfigFlags& flags) {
  cmd->add_option("--kappa", flags.kappa, "Tiles per facet axis")
      ->check(CLI::PositiveNumber)
      ->envname("QDAA_KAPPA");
  cmd->add_option("--sims", flags.sims, "Simulations per tile")
      ->check(CLI::PositiveNumber)
      ->envname("QDAA_SIMS");
  cmd->add_option("--tmax", flags.tmax, "Simulation horizon per rectangle")->envname("QDAA_TMAX");
  cmd->add_option("--step", flags.step, "RK4 step (default derived from the model)")->envname("QDAA_STEP");
  cmd->add_option("--seed", flags.seed, "Random seed")->envname("QDAA_SEED");
  cmd->add_flag("--backward", flags.backward, "Refine successor entry sets by backward simulation")
      ->envname("QDAA_BACKWARD");
  cmd->add_option("--subgrid", flags.subgrid, "Subgrid density for set-measure estimation")
      ->check(CLI::PositiveNumber)
      ->envname("QDAA_SUBGRID");
  cmd->add_option("--threads", flags.threads, "Worker threads (0 = all cores); never affects results")
      ->envname("QDAA_THREADS");
}

qdaa::RunConfig resolve_config(const qdaa::BiochemicalSystem& system, const ConfigFlags& flags) {
  qdaa::RunConfig cfg;
  cfg.kappa = flags.kappa;
  cfg.sims_per_tile = flags.sims;
  cfg.integrator = qdaa::default_integrator_config(system);
  if (flags.step > 0.0) cfg.integrator.step = flags.step;
  if (flags.tmax > 0.0) cfg.integrator.t_max = flags.tmax;
  cfg.seed = flags.seed;
  cfg.backward_refine = flags.backward;
  cfg.subgrid = flags.subgrid;
  cfg.threads = flags.threads > 0 ? flags.threads
                                  : std::max(1u, std::thread::hardware_concurrency());
  cfg.validate();
  return cfg;
}

int resolve_axis(const qdaa::Qdaa& automaton, const std::string& name) {
  for (std::size_t i = 0; i < automaton.variables.size(); ++i)
    if (automaton.variables[i] == name) return static_cast<int>(i);
  throw std::invalid_argument("unknown variable '" + name + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantitative discrete approximation automata for multi-affine biochemical systems"};
  app.require_subcommand(1);

  std::string model_arg, constants_path, automaton_path, out_path, report_path, format, axes;
  ConfigFlags flags;

  auto* build = app.add_subcommand("build", "Build the automaton of a model and write it to disk");
  build->add_option("model", model_arg, "Model file, or builtin name (oscillatory, enzyme, ecoli)")->required();
  build->add_option("--constants", constants_path, "Rate-constants file for the ecoli builtin");
  build->add_option("-o,--out", out_path, "Automaton output path (default <model>.qdaa)");
  build->add_option("--report-out", report_path, "Also write the run report as JSON");
  add_config_flags(build, flags);

  auto* bounds = app.add_subcommand("bounds", "Print per-variable reachable bounds of a built automaton");
  bounds->add_option("automaton", automaton_path, "Automaton file")->required();

  auto* compare = app.add_subcommand("compare-rats", "Compare reachable rectangles against the rectangular abstraction");
  compare->add_option("model", model_arg, "Model file or builtin name")->required();
  compare->add_option("--constants", constants_path, "Rate-constants file for the ecoli builtin");
  add_config_flags(compare, flags);

  auto* render = app.add_subcommand("render", "Render a 2D projection of the reachable set as SVG");
  render->add_option("automaton", automaton_path, "Automaton file")->required();
  render->add_option("--axes", axes, "Projection axes as two variable names, e.g. X,Y")->required();
  render->add_option("-o,--out", out_path, "SVG output path (default <automaton>.svg)");

  auto* exporter = app.add_subcommand("export", "Export the automaton as DOT or CSV");
  exporter->add_option("automaton", automaton_path, "Automaton file")->required();
  exporter->add_option("--format", format, "dot or csv")->required()->check(CLI::IsMember({"dot", "csv"}));
  exporter->add_option("-o,--out", out_path, "Output path (default <automaton>.<format>)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitParse;
  }

  try {
    if (*build) {
      const qdaa::BiochemicalSystem system = load_model(model_arg, constants_path);
      const qdaa::RunConfig cfg = resolve_config(system, flags);
      const qdaa::Qdaa automaton = qdaa::build_reachable(system, cfg);
      const std::string path = out_path.empty() ? system.name + ".qdaa" : out_path;
      qdaa::write_file(path, qdaa::serialize_automaton(automaton));
      const qdaa::RunReport report = qdaa::make_report(automaton);
      std::cout << qdaa::format_report(report);
      std::cout << "automaton      " << path << "\n";
      if (!report_path.empty()) qdaa::write_file(report_path, qdaa::report_to_json(report));
    } else if (*bounds) {
      const qdaa::Qdaa automaton = qdaa::parse_automaton(qdaa::read_file(automaton_path));
      const auto table = qdaa::variable_bounds(automaton);
      std::size_t width = 0;
      for (const auto& v : automaton.variables) width = std::max(width, v.size());
      for (std::size_t i = 0; i < table.size(); ++i) {
        std::printf("%-*s  [%.17g, %.17g]\n", static_cast<int>(width), automaton.variables[i].c_str(),
                    table[i].first, table[i].second);
      }
    } else if (*compare) {
      const qdaa::BiochemicalSystem system = load_model(model_arg, constants_path);
      const qdaa::RunConfig cfg = resolve_config(system, flags);
      const qdaa::Qdaa automaton = qdaa::build_reachable(system, cfg);
      const qdaa::Rats rats = qdaa::build_rats(system);
      std::uint64_t contained = 0, escaped = 0;
      std::set<qdaa::RectIndex> rects;
      for (const qdaa::QdaaState& s : automaton.states) rects.insert(s.rect);
      for (const qdaa::RectIndex& rect : rects) (rats.is_reachable(rect) ? contained : escaped)++;
      std::cout << "qdaa-rectangles  " << rects.size() << "\n";
      std::cout << "rats-rectangles  " << rats.reachable_count() << "\n";
      std::cout << "containment      " << (escaped == 0 ? "true" : "false") << "\n";
      std::cout << "pruned           " << (rats.reachable_count() - contained) << "\n";
    } else if (*render) {
      const qdaa::Qdaa automaton = qdaa::parse_automaton(qdaa::read_file(automaton_path));
      const auto comma = axes.find(',');
      if (comma == std::string::npos) throw std::invalid_argument("--axes expects two names, e.g. X,Y");
      const int ax = resolve_axis(automaton, axes.substr(0, comma));
      const int ay = resolve_axis(automaton, axes.substr(comma + 1));
      const std::string path = out_path.empty() ? automaton_path + ".svg" : out_path;
      qdaa::write_file(path, qdaa::render_svg(automaton, ax, ay));
      std::cout << "svg " << path << "\n";
    } else if (*exporter) {
      const qdaa::Qdaa automaton = qdaa::parse_automaton(qdaa::read_file(automaton_path));
      const std::string path = out_path.empty() ? automaton_path + "." + format : out_path;
      qdaa::write_file(path, format == "dot" ? qdaa::export_dot(automaton) : qdaa::export_csv(automaton));
      std::cout << format << " " << path << "\n";
    }
  } catch (const qdaa::SimulationError& e) {
    std::cerr << "simulation error: " << e.what() << "\n";
    return kExitSimulation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  }
  return kExitOk;
}
