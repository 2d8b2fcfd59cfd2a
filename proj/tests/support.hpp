#ifndef QDAA_TESTS_SUPPORT_HPP
#define QDAA_TESTS_SUPPORT_HPP

#include <map>
#include <vector>

#include "qdaa/model.hpp"
#include "qdaa/rng.hpp"

namespace qdaa::test {

/// System over a uniform grid box with the given field; initial set = first
/// rectangle unless an index box is supplied.
inline BiochemicalSystem make_system(int n, std::vector<std::vector<MultiAffineTerm>> equations,
                                     std::vector<std::vector<double>> thresholds,
                                     std::vector<int> init_lo = {}, std::vector<int> init_hi = {}) {
  BiochemicalSystem system;
  system.name = "test";
  for (int i = 0; i < n; ++i) system.variables.push_back("x" + std::to_string(i));
  system.field = MultiAffineField(n, std::move(equations));
  system.partition.thresholds = std::move(thresholds);
  if (init_lo.empty()) init_lo.assign(n, 0);
  if (init_hi.empty()) init_hi = init_lo;
  system.init_lo = init_lo;
  system.init_hi = init_hi;
  system.initial = expand_init_box(init_lo, init_hi);
  system.validate();
  return system;
}

/// Uniform thresholds 0..cells with unit spacing.
inline std::vector<double> unit_axis(int cells) {
  std::vector<double> t;
  for (int i = 0; i <= cells; ++i) t.push_back(i);
  return t;
}

/// Random multi-affine field with all pairwise-product terms, coefficients in
/// [-range, range].
inline MultiAffineField random_field(int n, RngStream& rng, double range = 2.0) {
  std::vector<std::vector<MultiAffineTerm>> equations(n);
  for (int i = 0; i < n; ++i) {
    equations[i].push_back({rng.uniform(-range, range), {}});
    for (int a = 0; a < n; ++a) {
      equations[i].push_back({rng.uniform(-range, range), {a}});
      for (int b = a + 1; b < n; ++b) equations[i].push_back({rng.uniform(-range, range), {a, b}});
    }
  }
  return MultiAffineField(n, std::move(equations));
}

/// Exact coverage fraction of `box` by the axis-aligned interval [lo, hi]
/// (facet boxes measure over their free axes).
inline double interval_coverage(const Box& box, const Vec& lo, const Vec& hi) {
  double frac = 1.0;
  for (int j = 0; j < box.dimension(); ++j) {
    const double w = box.hi[j] - box.lo[j];
    if (w <= 0.0) continue;
    const double overlap = std::min(box.hi[j], hi[j]) - std::max(box.lo[j], lo[j]);
    frac *= std::max(0.0, overlap) / w;
  }
  return frac;
}

}  // namespace qdaa::test

#endif
