#include "qdaa/render.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace qdaa {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::string render_svg(const Qdaa& a, int axis_x, int axis_y) {
  const int n = a.partition.dimension();
  if (axis_x < 0 || axis_x >= n || axis_y < 0 || axis_y >= n || axis_x == axis_y)
    throw std::invalid_argument("render: invalid projection axes");

  const auto& tx = a.partition.thresholds[axis_x];
  const auto& ty = a.partition.thresholds[axis_y];
  const double width = 720.0, height = 540.0, margin = 48.0;
  auto map_x = [&](double v) { return margin + (v - tx.front()) / (tx.back() - tx.front()) * width; };
  auto map_y = [&](double v) { return margin + height - (v - ty.front()) / (ty.back() - ty.front()) * height; };

  // Max first-passage intensity per projected cell; initial projections.
  std::map<std::pair<int, int>, double> intensity;
  for (const auto& [rect, fpi] : first_passage_by_rectangle(a)) {
    const std::pair<int, int> cell{rect.idx[axis_x], rect.idx[axis_y]};
    auto [it, inserted] = intensity.try_emplace(cell, fpi);
    if (!inserted) it->second = std::max(it->second, fpi);
  }
  std::set<std::pair<int, int>> initial_cells;
  for (int id : a.initial)
    initial_cells.insert({a.states[id].rect.idx[axis_x], a.states[id].rect.idx[axis_y]});

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width + 2 * margin) << "\" height=\""
      << num(height + 2 * margin) << "\" viewBox=\"0 0 " << num(width + 2 * margin) << " "
      << num(height + 2 * margin) << "\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << num(width + 2 * margin) << "\" height=\"" << num(height + 2 * margin)
      << "\" fill=\"white\"/>\n";

  // faint full grid
  out << "<g stroke=\"#dddddd\" stroke-width=\"0.5\">\n";
  for (double v : tx)
    out << "<line x1=\"" << num(map_x(v)) << "\" y1=\"" << num(map_y(ty.front())) << "\" x2=\"" << num(map_x(v))
        << "\" y2=\"" << num(map_y(ty.back())) << "\"/>\n";
  for (double v : ty)
    out << "<line x1=\"" << num(map_x(tx.front())) << "\" y1=\"" << num(map_y(v)) << "\" x2=\""
        << num(map_x(tx.back())) << "\" y2=\"" << num(map_y(v)) << "\"/>\n";
  out << "</g>\n";

  // reachable cells: fill opacity = first-passage intensity
  for (const auto& [cell, fpi] : intensity) {
    const double x0 = map_x(tx[cell.first]), x1 = map_x(tx[cell.first + 1]);
    const double y0 = map_y(ty[cell.second + 1]), y1 = map_y(ty[cell.second]);
    out << "<rect x=\"" << num(x0) << "\" y=\"" << num(y0) << "\" width=\"" << num(x1 - x0) << "\" height=\""
        << num(y1 - y0) << "\" fill=\"#2060c0\" fill-opacity=\"" << num(std::clamp(fpi, 0.0, 1.0))
        << "\" stroke=\"#406080\" stroke-width=\"0.8\"/>\n";
  }
  for (const auto& cell : initial_cells) {
    const double x0 = map_x(tx[cell.first]), x1 = map_x(tx[cell.first + 1]);
    const double y0 = map_y(ty[cell.second + 1]), y1 = map_y(ty[cell.second]);
    out << "<rect x=\"" << num(x0) << "\" y=\"" << num(y0) << "\" width=\"" << num(x1 - x0) << "\" height=\""
        << num(y1 - y0) << "\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n";
  }

  // frame and axis labels
  out << "<rect x=\"" << num(map_x(tx.front())) << "\" y=\"" << num(map_y(ty.back())) << "\" width=\""
      << num(map_x(tx.back()) - map_x(tx.front())) << "\" height=\"" << num(map_y(ty.front()) - map_y(ty.back()))
      << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  out << "<text x=\"" << num(margin + width / 2) << "\" y=\"" << num(height + 2 * margin - 12)
      << "\" font-size=\"14\" text-anchor=\"middle\">" << a.variables[axis_x] << "</text>\n";
  out << "<text x=\"14\" y=\"" << num(margin + height / 2)
      << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << num(margin + height / 2)
      << ")\">" << a.variables[axis_y] << "</text>\n";
  out << "<text x=\"" << num(map_x(tx.front())) << "\" y=\"" << num(height + margin + 16) << "\" font-size=\"10\">"
      << num(tx.front()) << "</text>\n";
  out << "<text x=\"" << num(map_x(tx.back())) << "\" y=\"" << num(height + margin + 16)
      << "\" font-size=\"10\" text-anchor=\"end\">" << num(tx.back()) << "</text>\n";
  out << "<text x=\"" << num(margin - 4) << "\" y=\"" << num(map_y(ty.front()))
      << "\" font-size=\"10\" text-anchor=\"end\">" << num(ty.front()) << "</text>\n";
  out << "<text x=\"" << num(margin - 4) << "\" y=\"" << num(map_y(ty.back()) + 10)
      << "\" font-size=\"10\" text-anchor=\"end\">" << num(ty.back()) << "</text>\n";
  out << "</svg>\n";
  return out.str();
}

}  // namespace qdaa
