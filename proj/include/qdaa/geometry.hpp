#ifndef QDAA_GEOMETRY_HPP
#define QDAA_GEOMETRY_HPP

#include <Eigen/Dense>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "qdaa/rng.hpp"

namespace qdaa {

using Vec = Eigen::VectorXd;

/// Threshold grid: one strictly increasing list of nonnegative values per axis.
/// Adjacent thresholds delimit the rectangles of the phase-space partition.
struct Partition {
  std::vector<std::vector<double>> thresholds;

  int dimension() const { return static_cast<int>(thresholds.size()); }
  int rect_count(int axis) const { return static_cast<int>(thresholds[axis].size()) - 1; }
  std::uint64_t total_rects() const;
  double min_value(int axis) const { return thresholds[axis].front(); }
  double max_value(int axis) const { return thresholds[axis].back(); }

  /// Throws std::invalid_argument on unsorted, short, or negative lists.
  void validate() const;

  bool operator==(const Partition&) const = default;
};

/// Grid coordinates of one rectangle: idx[j] in [0, |T_j| - 2].
struct RectIndex {
  std::vector<int> idx;

  int dimension() const { return static_cast<int>(idx.size()); }
  bool operator==(const RectIndex&) const = default;
  auto operator<=>(const RectIndex&) const = default;
};

bool valid_rect(const RectIndex& rect, const Partition& partition);

enum class Side : int { lower = 0, upper = 1 };

inline Side opposite(Side s) { return s == Side::lower ? Side::upper : Side::lower; }

/// One (n-1)-dimensional face of a rectangle: coordinate `axis` pinned to the
/// lower or upper threshold of the rectangle.
struct FacetRef {
  RectIndex rect;
  int axis = 0;
  Side side = Side::lower;

  bool operator==(const FacetRef&) const = default;
};

/// 0..2n-1, stable enumeration order of the facets of a rectangle.
inline int facet_ordinal(int axis, Side side) { return axis * 2 + static_cast<int>(side); }

/// Axis-aligned box given by per-axis bounds. For facet boxes the pinned axis
/// has lo == hi.
struct Box {
  Vec lo, hi;

  int dimension() const { return static_cast<int>(lo.size()); }
  double volume() const { return (hi - lo).prod(); }
  /// Product of side lengths skipping `axis` ((n-1)-dimensional volume).
  double area_without(int axis) const;
  double diameter() const { return (hi - lo).norm(); }
  bool contains(const Vec& x) const;
};

/// One cell of the uniform kappa-per-axis subdivision of a facet (multi-index
/// over the n-1 free axes) or of a whole rectangle (multi-index over all axes).
struct TileRef {
  std::variant<FacetRef, RectIndex> parent;
  std::vector<int> multi;

  bool is_facet_tile() const { return std::holds_alternative<FacetRef>(parent); }
  const RectIndex& owner_rect() const {
    return is_facet_tile() ? std::get<FacetRef>(parent).rect : std::get<RectIndex>(parent);
  }
  bool operator==(const TileRef&) const = default;
};

/// Per-axis intervals [T_j[idx_j], T_j[idx_j + 1]] of a rectangle.
Box rect_bounds(const RectIndex& rect, const Partition& partition);

/// Bounds of a facet: the pinned axis collapses to the threshold plane.
Box facet_bounds(const FacetRef& facet, const Partition& partition);

/// Threshold value of the plane the facet lies in.
double facet_plane(const FacetRef& facet, const Partition& partition);

/// The rectangle sharing exactly this facet, or nullopt when the facet lies on
/// the outer phase-space boundary.
std::optional<RectIndex> neighbor(const FacetRef& facet, const Partition& partition);

/// The same geometric facet referenced from the neighbouring rectangle.
FacetRef facet_from_neighbor(const FacetRef& facet, const RectIndex& neighbor_rect);

/// Unit vector orthogonal to the facet, pointing out of its rectangle:
/// -e_axis for the lower side, +e_axis for the upper side.
Vec outward_normal(const FacetRef& facet);

/// All kappa-tiles of a facet (kappa^{n-1}) in multi-index order.
std::vector<TileRef> tiles_of(const FacetRef& facet, int kappa);

/// All kappa-tiles of a rectangle (kappa^n) in multi-index order.
std::vector<TileRef> tiles_of(const RectIndex& rect, int kappa);

Box tile_bounds(const TileRef& tile, const Partition& partition, int kappa);

/// n-dimensional volume for rectangle tiles, (n-1)-dimensional for facet tiles.
double tile_volume(const TileRef& tile, const Partition& partition, int kappa);

/// Row-major linearization of a tile multi-index (last component fastest).
int linear_tile_index(std::span<const int> multi, int kappa);
std::vector<int> tile_multi_from_linear(int linear, int kappa, int arity);

/// Linear index of the facet tile containing a point of the facet plane
/// (free coordinates clamped into the facet).
int facet_tile_index_of(const FacetRef& facet, const Vec& point, const Partition& partition, int kappa);

/// Uniform sample inside the tile box; for facet tiles the pinned coordinate
/// equals the facet plane value exactly.
Vec sample_point_in_tile(const TileRef& tile, const Partition& partition, int kappa, RngStream& rng);

using CoverageFn = std::function<double(const Box&)>;
using IndicatorFn = std::function<bool(const Vec&)>;

/// Tiles whose coverage fraction is at least 1/2 (a fraction of exactly 1/2
/// counts as covered). `coverage` returns the fraction of a tile box lying in
/// the approximated set.
std::vector<TileRef> tiles_where(const FacetRef& facet, const Partition& partition, int kappa,
                                 const CoverageFn& coverage);
std::vector<TileRef> tiles_where(const RectIndex& rect, const Partition& partition, int kappa,
                                 const CoverageFn& coverage);

/// Same selection with coverage estimated on an s-per-axis regular subgrid of
/// cell centres.
std::vector<TileRef> tiles_approximating(const FacetRef& facet, const Partition& partition, int kappa,
                                         const IndicatorFn& indicator, int subgrid);
std::vector<TileRef> tiles_approximating(const RectIndex& rect, const Partition& partition, int kappa,
                                         const IndicatorFn& indicator, int subgrid);

/// Rectangular kappa-grid measure: total tile volume of a tile selection.
double kappa_grid_measure(std::span<const TileRef> tiles, const Partition& partition, int kappa);

}  // namespace qdaa

#endif  // QDAA_GEOMETRY_HPP
