#include "qdaa/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qdaa {

std::uint64_t Partition::total_rects() const {
  std::uint64_t total = 1;
  for (int ax = 0; ax < dimension(); ++ax) total *= static_cast<std::uint64_t>(rect_count(ax));
  return total;
}

void Partition::validate() const {
  if (thresholds.empty()) throw std::invalid_argument("partition: no axes");
  for (int ax = 0; ax < dimension(); ++ax) {
    const auto& t = thresholds[ax];
    if (t.size() < 2) throw std::invalid_argument("partition: axis " + std::to_string(ax) + " has fewer than 2 thresholds");
    for (std::size_t i = 0; i + 1 < t.size(); ++i)
      if (!(t[i] < t[i + 1]))
        throw std::invalid_argument("partition: axis " + std::to_string(ax) + " thresholds not strictly increasing");
    if (t.front() < 0.0) throw std::invalid_argument("partition: axis " + std::to_string(ax) + " has negative threshold");
  }
}

bool valid_rect(const RectIndex& rect, const Partition& partition) {
  if (rect.dimension() != partition.dimension()) return false;
  for (int ax = 0; ax < rect.dimension(); ++ax)
    if (rect.idx[ax] < 0 || rect.idx[ax] >= partition.rect_count(ax)) return false;
  return true;
}

double Box::area_without(int axis) const {
  double a = 1.0;
  for (int j = 0; j < dimension(); ++j)
    if (j != axis) a *= hi[j] - lo[j];
  return a;
}

bool Box::contains(const Vec& x) const {
  for (int j = 0; j < dimension(); ++j)
    if (x[j] < lo[j] || x[j] > hi[j]) return false;
  return true;
}

Box rect_bounds(const RectIndex& rect, const Partition& partition) {
  const int n = rect.dimension();
  Box box{Vec(n), Vec(n)};
  for (int j = 0; j < n; ++j) {
    box.lo[j] = partition.thresholds[j][rect.idx[j]];
    box.hi[j] = partition.thresholds[j][rect.idx[j] + 1];
  }
  return box;
}

double facet_plane(const FacetRef& facet, const Partition& partition) {
  const int offset = facet.side == Side::lower ? 0 : 1;
  return partition.thresholds[facet.axis][facet.rect.idx[facet.axis] + offset];
}

Box facet_bounds(const FacetRef& facet, const Partition& partition) {
  Box box = rect_bounds(facet.rect, partition);
  const double plane = facet_plane(facet, partition);
  box.lo[facet.axis] = plane;
  box.hi[facet.axis] = plane;
  return box;
}

std::optional<RectIndex> neighbor(const FacetRef& facet, const Partition& partition) {
  RectIndex other = facet.rect;
  if (facet.side == Side::lower) {
    if (other.idx[facet.axis] == 0) return std::nullopt;
    --other.idx[facet.axis];
  } else {
    if (other.idx[facet.axis] + 1 >= partition.rect_count(facet.axis)) return std::nullopt;
    ++other.idx[facet.axis];
  }
  return other;
}

FacetRef facet_from_neighbor(const FacetRef& facet, const RectIndex& neighbor_rect) {
  return FacetRef{neighbor_rect, facet.axis, opposite(facet.side)};
}

Vec outward_normal(const FacetRef& facet) {
  Vec nu = Vec::Zero(facet.rect.dimension());
  nu[facet.axis] = facet.side == Side::lower ? -1.0 : 1.0;
  return nu;
}

namespace {

// Free axes of a facet tile, increasing order.
std::vector<int> facet_free_axes(const FacetRef& facet) {
  std::vector<int> axes;
  axes.reserve(facet.rect.dimension() - 1);
  for (int j = 0; j < facet.rect.dimension(); ++j)
    if (j != facet.axis) axes.push_back(j);
  return axes;
}

template <typename Parent>
std::vector<TileRef> enumerate_tiles(const Parent& parent, int kappa, int arity) {
  if (kappa < 1) throw std::invalid_argument("kappa must be >= 1");
  std::uint64_t count = 1;
  for (int k = 0; k < arity; ++k) count *= static_cast<std::uint64_t>(kappa);
  std::vector<TileRef> tiles;
  tiles.reserve(count);
  std::vector<int> multi(arity, 0);
  for (std::uint64_t i = 0; i < count; ++i) {
    tiles.push_back(TileRef{parent, multi});
    for (int k = arity - 1; k >= 0; --k) {
      if (++multi[k] < kappa) break;
      multi[k] = 0;
    }
  }
  return tiles;
}

void subdivide_axis(double a, double b, int k, int kappa, double& lo, double& hi) {
  const double w = b - a;
  lo = a + (static_cast<double>(k) / kappa) * w;
  hi = a + (static_cast<double>(k + 1) / kappa) * w;
}

}  // namespace

std::vector<TileRef> tiles_of(const FacetRef& facet, int kappa) {
  return enumerate_tiles(facet, kappa, facet.rect.dimension() - 1);
}

std::vector<TileRef> tiles_of(const RectIndex& rect, int kappa) {
  return enumerate_tiles(rect, kappa, rect.dimension());
}

Box tile_bounds(const TileRef& tile, const Partition& partition, int kappa) {
  const RectIndex& rect = tile.owner_rect();
  Box box = rect_bounds(rect, partition);
  if (tile.is_facet_tile()) {
    const FacetRef& facet = std::get<FacetRef>(tile.parent);
    const double plane = facet_plane(facet, partition);
    const std::vector<int> axes = facet_free_axes(facet);
    for (std::size_t k = 0; k < axes.size(); ++k)
      subdivide_axis(box.lo[axes[k]], box.hi[axes[k]], tile.multi[k], kappa, box.lo[axes[k]], box.hi[axes[k]]);
    box.lo[facet.axis] = plane;
    box.hi[facet.axis] = plane;
  } else {
    for (int j = 0; j < rect.dimension(); ++j)
      subdivide_axis(box.lo[j], box.hi[j], tile.multi[j], kappa, box.lo[j], box.hi[j]);
  }
  return box;
}

double tile_volume(const TileRef& tile, const Partition& partition, int kappa) {
  const Box box = tile_bounds(tile, partition, kappa);
  if (tile.is_facet_tile()) return box.area_without(std::get<FacetRef>(tile.parent).axis);
  return box.volume();
}

int linear_tile_index(std::span<const int> multi, int kappa) {
  int linear = 0;
  for (int m : multi) linear = linear * kappa + m;
  return linear;
}

std::vector<int> tile_multi_from_linear(int linear, int kappa, int arity) {
  std::vector<int> multi(arity, 0);
  for (int k = arity - 1; k >= 0; --k) {
    multi[k] = linear % kappa;
    linear /= kappa;
  }
  return multi;
}

int facet_tile_index_of(const FacetRef& facet, const Vec& point, const Partition& partition, int kappa) {
  const Box box = rect_bounds(facet.rect, partition);
  int linear = 0;
  for (int j = 0; j < facet.rect.dimension(); ++j) {
    if (j == facet.axis) continue;
    const double w = box.hi[j] - box.lo[j];
    int cell = static_cast<int>(std::floor((point[j] - box.lo[j]) / w * kappa));
    cell = std::clamp(cell, 0, kappa - 1);
    linear = linear * kappa + cell;
  }
  return linear;
}

Vec sample_point_in_tile(const TileRef& tile, const Partition& partition, int kappa, RngStream& rng) {
  const Box box = tile_bounds(tile, partition, kappa);
  const int n = box.dimension();
  Vec p(n);
  const int pinned = tile.is_facet_tile() ? std::get<FacetRef>(tile.parent).axis : -1;
  for (int j = 0; j < n; ++j)
    p[j] = j == pinned ? box.lo[j] : rng.uniform(box.lo[j], box.hi[j]);
  return p;
}

namespace {

template <typename Parent>
std::vector<TileRef> select_tiles(const Parent& parent, const Partition& partition, int kappa,
                                  const CoverageFn& coverage) {
  std::vector<TileRef> selected;
  for (TileRef& tile : tiles_of(parent, kappa)) {
    if (coverage(tile_bounds(tile, partition, kappa)) >= 0.5) selected.push_back(std::move(tile));
  }
  return selected;
}

// Fraction of subgrid cell centres satisfying the indicator. The pinned axis
// of facet boxes contributes a single coordinate.
CoverageFn subgrid_coverage(const IndicatorFn& indicator, int subgrid) {
  if (subgrid < 1) throw std::invalid_argument("subgrid must be >= 1");
  return [indicator, subgrid](const Box& box) {
    const int n = box.dimension();
    std::uint64_t total = 1;
    for (int j = 0; j < n; ++j)
      if (box.hi[j] > box.lo[j]) total *= static_cast<std::uint64_t>(subgrid);
    Vec p(n);
    std::vector<int> pos(n, 0);
    std::uint64_t hit = 0;
    for (std::uint64_t i = 0; i < total; ++i) {
      for (int j = 0; j < n; ++j) {
        if (box.hi[j] > box.lo[j]) {
          const double w = (box.hi[j] - box.lo[j]) / subgrid;
          p[j] = box.lo[j] + (pos[j] + 0.5) * w;
        } else {
          p[j] = box.lo[j];
        }
      }
      if (indicator(p)) ++hit;
      for (int j = n - 1; j >= 0; --j) {
        if (box.hi[j] <= box.lo[j]) continue;
        if (++pos[j] < subgrid) break;
        pos[j] = 0;
      }
    }
    return static_cast<double>(hit) / static_cast<double>(total);
  };
}

}  // namespace

std::vector<TileRef> tiles_where(const FacetRef& facet, const Partition& partition, int kappa,
                                 const CoverageFn& coverage) {
  return select_tiles(facet, partition, kappa, coverage);
}

std::vector<TileRef> tiles_where(const RectIndex& rect, const Partition& partition, int kappa,
                                 const CoverageFn& coverage) {
  return select_tiles(rect, partition, kappa, coverage);
}

std::vector<TileRef> tiles_approximating(const FacetRef& facet, const Partition& partition, int kappa,
                                         const IndicatorFn& indicator, int subgrid) {
  return select_tiles(facet, partition, kappa, subgrid_coverage(indicator, subgrid));
}

std::vector<TileRef> tiles_approximating(const RectIndex& rect, const Partition& partition, int kappa,
                                         const IndicatorFn& indicator, int subgrid) {
  return select_tiles(rect, partition, kappa, subgrid_coverage(indicator, subgrid));
}

double kappa_grid_measure(std::span<const TileRef> tiles, const Partition& partition, int kappa) {
  double total = 0.0;
  for (const TileRef& tile : tiles) total += tile_volume(tile, partition, kappa);
  return total;
}

}  // namespace qdaa
