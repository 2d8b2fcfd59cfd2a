#include "qdaa/rats.hpp"

#include <deque>
#include <functional>
#include <stdexcept>

namespace qdaa {

std::uint64_t Rats::reachable_count() const {
  std::uint64_t c = 0;
  for (char r : reachable) c += r ? 1 : 0;
  return c;
}

int Rats::linear_index(const RectIndex& rect) const {
  int linear = 0;
  for (int ax = 0; ax < partition.dimension(); ++ax) {
    if (rect.idx[ax] < 0 || rect.idx[ax] >= partition.rect_count(ax))
      throw std::invalid_argument("rectangle index outside the partition");
    linear = linear * partition.rect_count(ax) + rect.idx[ax];
  }
  return linear;
}

RectIndex Rats::rect_from_linear(int linear) const {
  const int n = partition.dimension();
  RectIndex rect;
  rect.idx.assign(n, 0);
  for (int ax = n - 1; ax >= 0; --ax) {
    rect.idx[ax] = linear % partition.rect_count(ax);
    linear /= partition.rect_count(ax);
  }
  return rect;
}

namespace {

// Applies fn to every corner of the box restricted to `axes` (other
// coordinates already fixed in `point`). Early exit on fn returning true.
bool any_corner(Vec& point, const Box& box, const std::vector<int>& axes,
                const std::function<bool(const Vec&)>& fn) {
  const std::size_t corners = std::size_t{1} << axes.size();
  for (std::size_t mask = 0; mask < corners; ++mask) {
    for (std::size_t k = 0; k < axes.size(); ++k)
      point[axes[k]] = (mask >> k) & 1 ? box.hi[axes[k]] : box.lo[axes[k]];
    if (fn(point)) return true;
  }
  return false;
}

}  // namespace

Rats build_rats(const BiochemicalSystem& system) {
  system.validate();
  const int n = system.dimension();
  Rats rats;
  rats.partition = system.partition;
  const std::uint64_t total = system.partition.total_rects();
  if (total > (std::uint64_t{1} << 26)) throw std::invalid_argument("partition too large for the rectangular baseline");
  rats.successors.assign(total, {});
  rats.self_loop.assign(total, 0);
  rats.reachable.assign(total, 0);

  Vec point(n), f(n);
  std::vector<int> free_axes;
  for (std::uint64_t linear = 0; linear < total; ++linear) {
    const RectIndex rect = rats.rect_from_linear(static_cast<int>(linear));
    const Box box = rect_bounds(rect, system.partition);

    for (int axis = 0; axis < n; ++axis) {
      for (Side side : {Side::lower, Side::upper}) {
        const FacetRef facet{rect, axis, side};
        const auto nb = neighbor(facet, system.partition);
        if (!nb) continue;
        free_axes.clear();
        for (int j = 0; j < n; ++j)
          if (j != axis) free_axes.push_back(j);
        point[axis] = side == Side::lower ? box.lo[axis] : box.hi[axis];
        const double sign = side == Side::lower ? -1.0 : 1.0;
        const bool outward = any_corner(point, box, free_axes, [&](const Vec& v) {
          system.field.eval_into(v, f);
          return sign * f[axis] > 0.0;
        });
        if (outward) rats.successors[linear].push_back(rats.linear_index(*nb));
      }
    }

    // Self-loop when some corner of the rectangle has the flow pointing
    // strictly inward on every binding constraint, or vanishing entirely.
    std::vector<int> all_axes(n);
    for (int j = 0; j < n; ++j) all_axes[j] = j;
    const bool loops = any_corner(point, box, all_axes, [&](const Vec& v) {
      system.field.eval_into(v, f);
      if (f.isZero(0.0)) return true;
      for (int j = 0; j < n; ++j) {
        const bool at_lo = v[j] == box.lo[j];
        if (at_lo ? !(f[j] > 0.0) : !(f[j] < 0.0)) return false;
      }
      return true;
    });
    rats.self_loop[linear] = loops ? 1 : 0;
  }

  std::deque<int> queue;
  for (const RectIndex& rect : system.initial) {
    const int id = rats.linear_index(rect);
    rats.initial.push_back(id);
    if (!rats.reachable[id]) {
      rats.reachable[id] = 1;
      queue.push_back(id);
    }
  }
  while (!queue.empty()) {
    const int id = queue.front();
    queue.pop_front();
    for (int nb : rats.successors[id]) {
      if (!rats.reachable[nb]) {
        rats.reachable[nb] = 1;
        queue.push_back(nb);
      }
    }
  }
  return rats;
}

}  // namespace qdaa
