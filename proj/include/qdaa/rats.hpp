#ifndef QDAA_RATS_HPP
#define QDAA_RATS_HPP

#include <cstdint>
#include <vector>

#include "qdaa/model.hpp"

namespace qdaa {

/// Rectangular abstraction transition system: the classical conservative
/// over-approximation over the bare rectangle grid. A facet transition exists
/// when the flow points outward somewhere on the shared facet; multi-affine
/// components attain their extremes at facet corners, so corner evaluation
/// decides this exactly.
struct Rats {
  Partition partition;
  std::vector<std::vector<int>> successors;  // facet neighbours, per linear rectangle id
  std::vector<char> self_loop;
  std::vector<char> reachable;  // BFS from the initial rectangles
  std::vector<int> initial;

  std::uint64_t rect_count() const { return reachable.size(); }
  std::uint64_t reachable_count() const;

  int linear_index(const RectIndex& rect) const;
  RectIndex rect_from_linear(int linear) const;
  bool is_reachable(const RectIndex& rect) const { return reachable[linear_index(rect)] != 0; }
};

Rats build_rats(const BiochemicalSystem& system);

}  // namespace qdaa

#endif  // QDAA_RATS_HPP
