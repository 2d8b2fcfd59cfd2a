#ifndef QDAA_SIMULATE_HPP
#define QDAA_SIMULATE_HPP

#include "qdaa/model.hpp"

namespace qdaa {

struct IntegratorConfig {
  double step = 1e-3;        // fixed RK4 step, time units
  double t_max = 100.0;      // horizon after which a trajectory counts as staying inside
  double boundary_tol = 1e-9;  // relative geometric tolerance at facet planes
  int bisect_iters = 40;     // bisections of the crossing step

  void validate() const;
  bool operator==(const IntegratorConfig&) const = default;
};

/// Step heuristic: 1e-3 * (smallest rectangle side) / (max |f_i| over the
/// phase-space corners), clamped to [1e-6, 1e-1]. Multi-affine components
/// attain their extremes at corners, so the corner sweep is exact.
IntegratorConfig default_integrator_config(const BiochemicalSystem& system);

struct ExitOutcome {
  enum class Kind { exited, stayed_inside, diverged };

  Kind kind = Kind::stayed_inside;
  FacetRef facet;  // meaningful only when kind == exited
  Vec point;       // exit point, pinned coordinate exactly on the facet plane
  double time = 0.0;

  bool exited() const { return kind == Kind::exited; }
};

/// Classical 4th-order Runge-Kutta update.
Vec rk4_step(const MultiAffineField& field, const Vec& x, double h);

/// Strict flow conditions at a point of the facet plane: the flow enters the
/// rectangle when f(x) opposes the outward normal, and leaves it when f(x)
/// follows the outward normal. A vanishing dot product satisfies neither.
bool entering_condition(const MultiAffineField& field, const FacetRef& facet, const Vec& x);
bool leaving_condition(const MultiAffineField& field, const FacetRef& facet, const Vec& x);

/// Integrates from x0 until the trajectory leaves the rectangle through a
/// facet where the leaving condition holds, or t_max elapses. The crossing is
/// located by bisecting the first step whose endpoint falls outside; grazing
/// contacts (leaving condition fails at the located point) resume from a point
/// nudged back inside. Non-finite states report Kind::diverged.
ExitOutcome simulate_in_rectangle(const MultiAffineField& field, const RectIndex& rect,
                                  const Partition& partition, const Vec& x0, const IntegratorConfig& cfg);

}  // namespace qdaa

#endif  // QDAA_SIMULATE_HPP
