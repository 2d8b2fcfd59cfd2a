#ifndef QDAA_RENDER_HPP
#define QDAA_RENDER_HPP

#include <string>

#include "qdaa/automaton.hpp"

namespace qdaa {

/// Static SVG of the reachable set projected to two axes. Cell fill opacity is
/// the largest first-passage intensity among the rectangles projecting onto
/// the cell; reachable cells are outlined, initial cells outlined black.
std::string render_svg(const Qdaa& automaton, int axis_x, int axis_y);

}  // namespace qdaa

#endif  // QDAA_RENDER_HPP
