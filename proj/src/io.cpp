#include "qdaa/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace qdaa {

namespace {

std::string fmt(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string rect_str(const RectIndex& rect, char sep = ',') {
  std::string out;
  for (std::size_t i = 0; i < rect.idx.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(rect.idx[i]);
  }
  return out;
}

RectIndex rect_from_str(const std::string& text, char sep = ',') {
  RectIndex rect;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(sep, pos);
    if (end == std::string::npos) end = text.size();
    rect.idx.push_back(std::stoi(text.substr(pos, end - pos)));
    pos = end + 1;
  }
  return rect;
}

std::string entry_label(const QdaaState& s, const std::vector<std::string>& variables) {
  switch (s.entry.kind) {
    case EntrySet::Kind::whole_rectangle:
      return "H";
    case EntrySet::Kind::empty:
      return "\u2205";
    case EntrySet::Kind::facet_tiles: {
      const std::string axis = s.entry.axis < static_cast<int>(variables.size())
                                   ? variables[s.entry.axis]
                                   : "x" + std::to_string(s.entry.axis);
      return axis + (s.entry.side == Side::lower ? "-" : "+") + " " + std::to_string(s.entry.tiles.count()) + "t";
    }
  }
  return "?";
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

std::string serialize_automaton(const Qdaa& a) {
  std::ostringstream out;
  out << "qdaa-automaton v1\n";
  out << "model " << (a.model_name.empty() ? "-" : a.model_name) << " " << a.model_hash << "\n";
  out << "dim " << a.partition.dimension() << "\n";
  for (int i = 0; i < a.partition.dimension(); ++i) {
    out << "axis " << a.variables[i] << " =";
    for (double t : a.partition.thresholds[i]) out << " " << fmt(t);
    out << "\n";
  }
  const RunConfig& c = a.config;
  out << "kappa " << c.kappa << "\n";
  out << "sims " << c.sims_per_tile << "\n";
  out << "seed " << c.seed << "\n";
  out << "step " << fmt(c.integrator.step) << "\n";
  out << "tmax " << fmt(c.integrator.t_max) << "\n";
  out << "boundary-tol " << fmt(c.integrator.boundary_tol) << "\n";
  out << "bisect-iters " << c.integrator.bisect_iters << "\n";
  out << "backward " << (c.backward_refine ? 1 : 0) << "\n";
  out << "subgrid " << c.subgrid << "\n";
  out << "simulations " << a.stats.simulations << "\n";
  out << "states " << a.state_count() << "\n";
  for (int s = 0; s < a.state_count(); ++s) {
    const QdaaState& st = a.states[s];
    out << "state " << s << " rect " << rect_str(st.rect) << " ";
    switch (st.entry.kind) {
      case EntrySet::Kind::empty:
        out << "empty";
        break;
      case EntrySet::Kind::whole_rectangle:
        out << "whole";
        break;
      case EntrySet::Kind::facet_tiles:
        out << "facet " << st.entry.axis << " " << (st.entry.side == Side::lower ? "lower" : "upper") << " "
            << st.entry.tiles.to_hex();
        break;
    }
    out << "\n";
  }
  out << "initial";
  for (int id : a.initial) out << " " << id;
  out << "\n";
  out << "transitions " << a.transition_count() << "\n";
  for (int s = 0; s < static_cast<int>(a.adjacency.size()); ++s) {
    for (const Transition& t : a.adjacency[s]) {
      out << "edge " << (s == a.sink_id() ? std::string("sink") : std::to_string(s)) << " "
          << (t.dst == a.sink_id() ? std::string("sink") : std::to_string(t.dst)) << " " << fmt(t.weight) << "\n";
    }
  }
  return out.str();
}

Qdaa parse_automaton(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto fail = [](const std::string& what) -> std::runtime_error {
    return std::runtime_error("corrupt automaton file: " + what);
  };
  if (!std::getline(in, line) || line != "qdaa-automaton v1") throw fail("bad header");

  Qdaa a;
  int dim = 0;
  int declared_states = -1;
  std::string word;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    if (!(ls >> word)) continue;
    if (word == "model") {
      ls >> a.model_name >> a.model_hash;
      if (a.model_name == "-") a.model_name.clear();
    } else if (word == "dim") {
      ls >> dim;
    } else if (word == "axis") {
      std::string name, eq;
      ls >> name >> eq;
      std::vector<double> values;
      double v;
      while (ls >> v) values.push_back(v);
      a.variables.push_back(name);
      a.partition.thresholds.push_back(std::move(values));
    } else if (word == "kappa") {
      ls >> a.config.kappa;
    } else if (word == "sims") {
      ls >> a.config.sims_per_tile;
    } else if (word == "seed") {
      ls >> a.config.seed;
    } else if (word == "step") {
      ls >> a.config.integrator.step;
    } else if (word == "tmax") {
      ls >> a.config.integrator.t_max;
    } else if (word == "boundary-tol") {
      ls >> a.config.integrator.boundary_tol;
    } else if (word == "bisect-iters") {
      ls >> a.config.integrator.bisect_iters;
    } else if (word == "backward") {
      int b;
      ls >> b;
      a.config.backward_refine = b != 0;
    } else if (word == "subgrid") {
      ls >> a.config.subgrid;
    } else if (word == "simulations") {
      ls >> a.stats.simulations;
    } else if (word == "states") {
      ls >> declared_states;
      a.states.reserve(declared_states);
    } else if (word == "state") {
      int id;
      std::string kw, rect_text, kind;
      ls >> id >> kw >> rect_text >> kind;
      if (kw != "rect" || id != static_cast<int>(a.states.size())) throw fail("state table out of order");
      QdaaState st;
      st.rect = rect_from_str(rect_text);
      if (kind == "empty") {
        st.entry = EntrySet::empty_set();
      } else if (kind == "whole") {
        st.entry = EntrySet::whole_rectangle();
      } else if (kind == "facet") {
        int axis;
        std::string side, bits;
        ls >> axis >> side >> bits;
        st.entry = EntrySet::facet(axis, side == "lower" ? Side::lower : Side::upper, TileBitset::from_hex(bits));
      } else {
        throw fail("unknown entry kind '" + kind + "'");
      }
      a.states.push_back(std::move(st));
    } else if (word == "initial") {
      int id;
      while (ls >> id) a.initial.push_back(id);
    } else if (word == "transitions") {
      if (declared_states < 0 || static_cast<int>(a.states.size()) != declared_states)
        throw fail("state count mismatch");
      a.adjacency.assign(a.states.size() + 1, {});
    } else if (word == "edge") {
      std::string src_text, dst_text;
      double weight;
      ls >> src_text >> dst_text >> weight;
      if (a.adjacency.empty()) throw fail("edge before transitions header");
      const int src = src_text == "sink" ? a.sink_id() : std::stoi(src_text);
      const int dst = dst_text == "sink" ? a.sink_id() : std::stoi(dst_text);
      if (src < 0 || src > a.sink_id() || dst < 0 || dst > a.sink_id()) throw fail("edge id out of range");
      a.adjacency[src].push_back({dst, weight});
    } else {
      throw fail("unknown directive '" + word + "'");
    }
  }
  if (declared_states < 0 || a.adjacency.empty()) throw fail("missing state or transition table");
  if (dim != a.partition.dimension()) throw fail("axis count does not match dim");
  a.validate();
  return a;
}

std::string export_dot(const Qdaa& a) {
  std::ostringstream out;
  out << "digraph qdaa {\n  rankdir=LR;\n  node [shape=box, fontsize=10];\n";
  bool sink_used = false;
  for (int s = 0; s < a.state_count(); ++s)
    for (const Transition& t : a.adjacency[s])
      if (t.dst == a.sink_id()) sink_used = true;
  for (int s = 0; s < a.state_count(); ++s) {
    out << "  s" << s << " [label=\"(" << rect_str(a.states[s].rect) << " | "
        << entry_label(a.states[s], a.variables) << ")\"";
    if (std::find(a.initial.begin(), a.initial.end(), s) != a.initial.end()) out << ", penwidth=2";
    out << "];\n";
  }
  if (sink_used) out << "  sink [label=\"out of bounds\", shape=doublecircle];\n";
  for (int s = 0; s < static_cast<int>(a.adjacency.size()); ++s) {
    if (s == a.sink_id() && !sink_used) continue;
    for (const Transition& t : a.adjacency[s]) {
      if (s == a.sink_id() && t.dst == a.sink_id()) continue;  // keep the sink leaf-like in the drawing
      out << "  " << (s == a.sink_id() ? std::string("sink") : "s" + std::to_string(s)) << " -> "
          << (t.dst == a.sink_id() ? std::string("sink") : "s" + std::to_string(t.dst));
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3g", t.weight);
      out << " [label=\"" << buf << "\"];\n";
    }
  }
  out << "}\n";
  return out.str();
}

std::string export_csv(const Qdaa& a) {
  std::ostringstream out;
  out << "# qdaa-csv v1 sink=" << a.sink_id() << " initial=";
  for (std::size_t i = 0; i < a.initial.size(); ++i) out << (i ? ";" : "") << a.initial[i];
  out << "\n";
  out << "src,dst,weight,src_rect,dst_rect\n";
  for (int s = 0; s < static_cast<int>(a.adjacency.size()); ++s) {
    const bool src_sink = s == a.sink_id();
    for (const Transition& t : a.adjacency[s]) {
      const bool dst_sink = t.dst == a.sink_id();
      out << s << "," << t.dst << "," << fmt(t.weight) << ","
          << (src_sink ? std::string("sink") : rect_str(a.states[s].rect, ':')) << ","
          << (dst_sink ? std::string("sink") : rect_str(a.states[t.dst].rect, ':')) << "\n";
    }
  }
  return out.str();
}

Qdaa import_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# qdaa-csv v1", 0) != 0)
    throw std::runtime_error("not a qdaa transition CSV");
  Qdaa a;
  int sink = -1;
  {
    std::istringstream hs(line.substr(13));
    std::string token;
    while (hs >> token) {
      if (token.rfind("sink=", 0) == 0) sink = std::stoi(token.substr(5));
      if (token.rfind("initial=", 0) == 0) {
        std::string ids = token.substr(8);
        std::size_t pos = 0;
        while (pos <= ids.size() && !ids.empty()) {
          std::size_t end = ids.find(';', pos);
          if (end == std::string::npos) end = ids.size();
          a.initial.push_back(std::stoi(ids.substr(pos, end - pos)));
          pos = end + 1;
        }
      }
    }
  }
  if (sink < 0) throw std::runtime_error("qdaa CSV header lacks the sink id");
  if (!std::getline(in, line) || line != "src,dst,weight,src_rect,dst_rect")
    throw std::runtime_error("qdaa CSV column header mismatch");

  a.states.assign(sink, QdaaState{});
  a.adjacency.assign(sink + 1, {});
  std::vector<char> seen(sink, 0);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t end = line.find(',', pos);
      if (end == std::string::npos) end = line.size();
      cols.push_back(line.substr(pos, end - pos));
      pos = end + 1;
    }
    if (cols.size() != 5) throw std::runtime_error("qdaa CSV row with wrong column count");
    const int src = std::stoi(cols[0]);
    const int dst = std::stoi(cols[1]);
    const double weight = std::stod(cols[2]);
    if (src < 0 || src > sink || dst < 0 || dst > sink) throw std::runtime_error("qdaa CSV id out of range");
    a.adjacency[src].push_back({dst, weight});
    if (src < sink && !seen[src]) {
      a.states[src].rect = rect_from_str(cols[3], ':');
      seen[src] = 1;
    }
    if (dst < sink && !seen[dst]) {
      a.states[dst].rect = rect_from_str(cols[4], ':');
      seen[dst] = 1;
    }
  }
  return a;
}

RunReport make_report(const Qdaa& a) {
  RunReport r;
  r.model_name = a.model_name;
  r.model_hash = a.model_hash;
  r.config = a.config;
  r.states = a.state_count();
  r.transitions = a.transition_count();
  const MemoryStats ms = memory_stats(a);
  r.rectangles = ms.rectangles;
  r.rho = ms.rho;
  r.variables = a.variables;
  r.bounds = variable_bounds(a);
  r.stats = a.stats;
  return r;
}

std::string format_report(const RunReport& r) {
  std::ostringstream out;
  out << "model          " << (r.model_name.empty() ? "(file)" : r.model_name) << "  hash " << r.model_hash
      << "\n";
  out << "kappa          " << r.config.kappa << "\n";
  out << "sims-per-tile  " << r.config.sims_per_tile << "\n";
  out << "seed           " << r.config.seed << "\n";
  out << "step           " << fmt(r.config.integrator.step) << "\n";
  out << "tmax           " << fmt(r.config.integrator.t_max) << "\n";
  out << "boundary-tol   " << fmt(r.config.integrator.boundary_tol) << "\n";
  out << "bisect-iters   " << r.config.integrator.bisect_iters << "\n";
  out << "backward       " << (r.config.backward_refine ? "on" : "off") << "\n";
  out << "subgrid        " << r.config.subgrid << "\n";
  out << "threads        " << r.config.threads << "\n";
  out << "states         " << r.states << "\n";
  out << "transitions    " << r.transitions << "\n";
  out << "rectangles     " << r.rectangles << "\n";
  out << "rho            " << std::fixed << std::setprecision(3) << r.rho << "\n";
  out.unsetf(std::ios::fixed);
  out << "bounds\n";
  std::size_t width = 0;
  for (const auto& v : r.variables) width = std::max(width, v.size());
  for (std::size_t i = 0; i < r.variables.size(); ++i)
    out << "  " << std::left << std::setw(static_cast<int>(width)) << r.variables[i] << std::right << "  ["
        << fmt(r.bounds[i].first) << ", " << fmt(r.bounds[i].second) << "]\n";
  out << "simulations    " << r.stats.simulations << "\n";
  if (r.stats.diverged) out << "diverged       " << r.stats.diverged << "\n";
  if (r.stats.dead_draws) out << "dead-draws     " << r.stats.dead_draws << "\n";
  if (r.stats.dropped_transitions) out << "dropped        " << r.stats.dropped_transitions << "\n";
  if (r.stats.refine_fallbacks) out << "refine-fallback " << r.stats.refine_fallbacks << "\n";
  if (r.stats.refine_votes)
    out << "refine-votes   " << r.stats.refine_votes << " (" << r.stats.refine_rejects << " rejected)\n";
  out << "wall-seconds   " << std::fixed << std::setprecision(2) << r.stats.wall_seconds << "\n";
  return out.str();
}

std::string report_to_json(const RunReport& r) {
  nlohmann::json j;
  j["model"] = r.model_name;
  j["hash"] = r.model_hash;
  j["config"] = {{"kappa", r.config.kappa},
                 {"sims_per_tile", r.config.sims_per_tile},
                 {"seed", r.config.seed},
                 {"step", r.config.integrator.step},
                 {"tmax", r.config.integrator.t_max},
                 {"boundary_tol", r.config.integrator.boundary_tol},
                 {"bisect_iters", r.config.integrator.bisect_iters},
                 {"backward", r.config.backward_refine},
                 {"subgrid", r.config.subgrid},
                 {"threads", r.config.threads}};
  j["states"] = r.states;
  j["transitions"] = r.transitions;
  j["rectangles"] = r.rectangles;
  j["rho"] = r.rho;
  nlohmann::json bounds = nlohmann::json::object();
  for (std::size_t i = 0; i < r.variables.size(); ++i)
    bounds[r.variables[i]] = {r.bounds[i].first, r.bounds[i].second};
  j["bounds"] = bounds;
  j["simulations"] = r.stats.simulations;
  j["diverged"] = r.stats.diverged;
  j["dead_draws"] = r.stats.dead_draws;
  j["dropped_transitions"] = r.stats.dropped_transitions;
  j["wall_seconds"] = r.stats.wall_seconds;
  return j.dump(2) + "\n";
}

}  // namespace qdaa
