#include "qdaa/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qdaa {

void IntegratorConfig::validate() const {
  if (!(step > 0.0)) throw std::invalid_argument("integrator step must be positive");
  if (!(t_max >= step)) throw std::invalid_argument("t_max must be at least one step");
  if (!(boundary_tol > 0.0)) throw std::invalid_argument("boundary_tol must be positive");
  if (bisect_iters < 1) throw std::invalid_argument("bisect_iters must be >= 1");
}

IntegratorConfig default_integrator_config(const BiochemicalSystem& system) {
  const int n = system.dimension();
  double min_side = std::numeric_limits<double>::infinity();
  for (int ax = 0; ax < n; ++ax) {
    const auto& t = system.partition.thresholds[ax];
    for (std::size_t k = 0; k + 1 < t.size(); ++k) min_side = std::min(min_side, t[k + 1] - t[k]);
  }
  double max_f = 0.0;
  Vec corner(n), value(n);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    for (int ax = 0; ax < n; ++ax)
      corner[ax] = (mask >> ax) & 1 ? system.partition.max_value(ax) : system.partition.min_value(ax);
    system.field.eval_into(corner, value);
    max_f = std::max(max_f, value.cwiseAbs().maxCoeff());
  }
  IntegratorConfig cfg;
  const double raw = max_f > 0.0 ? 1e-3 * min_side / max_f : 1e-1;
  cfg.step = std::clamp(raw, 1e-6, 1e-1);
  return cfg;
}

namespace {

inline void rk4_into(const MultiAffineField& field, const Vec& x, double h, Vec& k1, Vec& k2, Vec& k3,
                     Vec& k4, Vec& tmp, Vec& out) {
  field.eval_into(x, k1);
  tmp = x + (0.5 * h) * k1;
  field.eval_into(tmp, k2);
  tmp = x + (0.5 * h) * k2;
  field.eval_into(tmp, k3);
  tmp = x + h * k3;
  field.eval_into(tmp, k4);
  out = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline double signed_dot(const Vec& f, int axis, Side side) {
  return side == Side::lower ? -f[axis] : f[axis];
}

}  // namespace

Vec rk4_step(const MultiAffineField& field, const Vec& x, double h) {
  Vec k1, k2, k3, k4, tmp, out;
  rk4_into(field, x, h, k1, k2, k3, k4, tmp, out);
  return out;
}

bool entering_condition(const MultiAffineField& field, const FacetRef& facet, const Vec& x) {
  Vec f(field.dimension());
  field.eval_into(x, f);
  return signed_dot(f, facet.axis, facet.side) < 0.0;
}

bool leaving_condition(const MultiAffineField& field, const FacetRef& facet, const Vec& x) {
  Vec f(field.dimension());
  field.eval_into(x, f);
  return signed_dot(f, facet.axis, facet.side) > 0.0;
}

ExitOutcome simulate_in_rectangle(const MultiAffineField& field, const RectIndex& rect,
                                  const Partition& partition, const Vec& x0, const IntegratorConfig& cfg) {
  const Box box = rect_bounds(rect, partition);
  const int n = box.dimension();
  auto plane_tol = [&](double plane) { return cfg.boundary_tol * (std::abs(plane) + 1.0); };

  Vec x = x0;
  for (int j = 0; j < n; ++j) {
    if (x[j] < box.lo[j] - plane_tol(box.lo[j]) || x[j] > box.hi[j] + plane_tol(box.hi[j]))
      throw std::invalid_argument("simulate_in_rectangle: start point outside the rectangle");
    x[j] = std::clamp(x[j], box.lo[j], box.hi[j]);
  }

  Vec k1(n), k2(n), k3(n), k4(n), tmp(n), next(n), mid(n), f(n);
  double t = 0.0;
  int stalled_grazes = 0;

  while (t < cfg.t_max) {
    const double h = std::min(cfg.step, cfg.t_max - t);
    rk4_into(field, x, h, k1, k2, k3, k4, tmp, next);
    if (!next.allFinite()) {
      ExitOutcome out;
      out.kind = ExitOutcome::Kind::diverged;
      out.time = t;
      return out;
    }
    if (box.contains(next)) {
      x.swap(next);
      t += h;
      continue;
    }

    // Bisect the substep length: lo keeps the endpoint inside, hi outside.
    double lo = 0.0, hi = h;
    for (int it = 0; it < cfg.bisect_iters; ++it) {
      const double m = 0.5 * (lo + hi);
      rk4_into(field, x, m, k1, k2, k3, k4, tmp, mid);
      (box.contains(mid) ? lo : hi) = m;
    }
    rk4_into(field, x, hi, k1, k2, k3, k4, tmp, mid);

    // Crossing point: clamp onto the boundary; violated axes are candidates.
    Vec crossing = mid;
    for (int j = 0; j < n; ++j) crossing[j] = std::clamp(crossing[j], box.lo[j], box.hi[j]);
    field.eval_into(crossing, f);

    int best_axis = -1;
    Side best_side = Side::lower;
    double best_dot = 0.0;
    for (int j = 0; j < n; ++j) {
      if (mid[j] < box.lo[j]) {
        const double d = signed_dot(f, j, Side::lower);
        if (d > best_dot) {
          best_dot = d;
          best_axis = j;
          best_side = Side::lower;
        }
      } else if (mid[j] > box.hi[j]) {
        const double d = signed_dot(f, j, Side::upper);
        if (d > best_dot) {
          best_dot = d;
          best_axis = j;
          best_side = Side::upper;
        }
      }
    }

    if (best_axis >= 0) {
      ExitOutcome out;
      out.kind = ExitOutcome::Kind::exited;
      out.facet = FacetRef{rect, best_axis, best_side};
      out.point = crossing;
      out.time = t + hi;
      return out;
    }

    // Grazing contact: the flow does not point outward at the located point,
    // so the trajectory has not left (strict leaving condition). Resume from
    // a point nudged inward off every violated plane.
    for (int j = 0; j < n; ++j) {
      if (mid[j] < box.lo[j]) crossing[j] = std::min(box.lo[j] + plane_tol(box.lo[j]), box.hi[j]);
      else if (mid[j] > box.hi[j]) crossing[j] = std::max(box.hi[j] - plane_tol(box.hi[j]), box.lo[j]);
    }
    x = crossing;
    stalled_grazes = hi > h * 1e-6 ? 0 : stalled_grazes + 1;
    if (stalled_grazes > 1000) break;  // boundary-pinned; report as staying inside
    t += hi;
  }

  ExitOutcome out;
  out.kind = ExitOutcome::Kind::stayed_inside;
  out.time = t;
  return out;
}

}  // namespace qdaa
