#include <doctest.h>

#include <cmath>

#include "qdaa/simulate.hpp"
#include "support.hpp"

using namespace qdaa;

namespace {

Vec point2(double x, double y) {
  Vec p(2);
  p << x, y;
  return p;
}

// dX = (1, 0): uniform rightward flow.
MultiAffineField rightward_field() { return MultiAffineField(2, {{{1.0, {}}}, {}}); }

IntegratorConfig quick_cfg(double step = 1e-2, double t_max = 10.0) {
  IntegratorConfig cfg;
  cfg.step = step;
  cfg.t_max = t_max;
  return cfg;
}

}  // namespace

TEST_CASE("rk4_step") {
  SUBCASE("zero field keeps the point") {
    MultiAffineField zero(2, {{}, {}});
    const Vec x = point2(0.3, 0.7);
    CHECK(rk4_step(zero, x, 0.1) == x);
  }
  SUBCASE("constant field is integrated exactly") {
    MultiAffineField c(2, {{{2.0, {}}}, {{-1.0, {}}}});
    const Vec y = rk4_step(c, point2(0, 0), 0.25);
    CHECK(y[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(y[1] == doctest::Approx(-0.25).epsilon(1e-15));
  }
  SUBCASE("exponential decay over 10 steps") {
    MultiAffineField decay(1, {{{-1.0, {0}}}});
    Vec x(1);
    x << 1.0;
    for (int i = 0; i < 10; ++i) x = rk4_step(decay, x, 0.1);
    CHECK(x[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-6));
  }
}

TEST_CASE("entering and leaving conditions") {
  const MultiAffineField f = rightward_field();
  const RectIndex rect{{0, 0}};
  SUBCASE("rightward flow enters through the left facet") {
    CHECK(entering_condition(f, FacetRef{rect, 0, Side::lower}, point2(0, 0.5)));
  }
  SUBCASE("and does not enter through the right facet") {
    CHECK(!entering_condition(f, FacetRef{rect, 0, Side::upper}, point2(1, 0.5)));
  }
  SUBCASE("it leaves through the right facet") {
    CHECK(leaving_condition(f, FacetRef{rect, 0, Side::upper}, point2(1, 0.5)));
  }
  SUBCASE("a vanishing dot product satisfies neither condition") {
    CHECK(!entering_condition(f, FacetRef{rect, 1, Side::upper}, point2(0.5, 1)));
    CHECK(!leaving_condition(f, FacetRef{rect, 1, Side::upper}, point2(0.5, 1)));
  }
  SUBCASE("leaving under f equals entering under -f") {
    RngStream rng(21);
    for (int i = 0; i < 50; ++i) {
      const MultiAffineField field = test::random_field(2, rng);
      const MultiAffineField neg = negate_field(field);
      const Side side = rng.next_u64() % 2 ? Side::upper : Side::lower;
      const int axis = static_cast<int>(rng.next_u64() % 2);
      const FacetRef facet{rect, axis, side};
      Vec x = point2(rng.uniform(0, 1), rng.uniform(0, 1));
      x[axis] = side == Side::upper ? 1.0 : 0.0;
      CHECK(leaving_condition(field, facet, x) == entering_condition(neg, facet, x));
    }
  }
}

TEST_CASE("simulate_in_rectangle") {
  Partition p;
  p.thresholds = {test::unit_axis(1), test::unit_axis(1)};
  const RectIndex rect{{0, 0}};

  SUBCASE("uniform flow crosses the unit box in unit time") {
    const ExitOutcome out = simulate_in_rectangle(rightward_field(), rect, p, point2(0, 0.5), quick_cfg());
    REQUIRE(out.exited());
    CHECK(out.facet.axis == 0);
    CHECK(out.facet.side == Side::upper);
    CHECK(out.point[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(out.point[1] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(out.time == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("zero field stays inside") {
    MultiAffineField zero(2, {{}, {}});
    const ExitOutcome out = simulate_in_rectangle(zero, rect, p, point2(0.5, 0.5), quick_cfg(1e-2, 1.0));
    CHECK(out.kind == ExitOutcome::Kind::stayed_inside);
  }
  SUBCASE("start point outside the rectangle is rejected") {
    CHECK_THROWS_AS(simulate_in_rectangle(rightward_field(), rect, p, point2(2.0, 0.5), quick_cfg()),
                    std::invalid_argument);
  }
}

TEST_CASE("oscillatory trajectories leave the initial rectangle") {
  const BiochemicalSystem sys = builtin_model("oscillatory");
  // dense-grid oracle: no fixed point inside [20,21]x[5,6]
  double min_norm = 1e9;
  for (int i = 0; i <= 50; ++i)
    for (int j = 0; j <= 50; ++j) {
      const Vec f = sys.field(point2(20.0 + i / 50.0, 5.0 + j / 50.0));
      min_norm = std::min(min_norm, f.norm());
    }
  CHECK(min_norm > 0.1);

  IntegratorConfig cfg = quick_cfg(1e-4, 50.0);
  const ExitOutcome out = simulate_in_rectangle(sys.field, RectIndex{{20, 5}}, sys.partition, point2(20.5, 5.5), cfg);
  CHECK(out.exited());
}

TEST_CASE("exit points satisfy the facet residual bound") {
  RngStream rng(3);
  Partition p;
  p.thresholds = {{0.0, 1.7}, {0.0, 2.3}};
  const RectIndex rect{{0, 0}};
  const Box box = rect_bounds(rect, p);
  IntegratorConfig cfg = quick_cfg(1e-3, 20.0);
  int exits = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const MultiAffineField field = test::random_field(2, rng);
    const Vec x0 = point2(rng.uniform(0.1, 1.6), rng.uniform(0.1, 2.2));
    const ExitOutcome out = simulate_in_rectangle(field, rect, p, x0, cfg);
    if (!out.exited()) continue;
    ++exits;
    const double plane = out.facet.side == Side::lower ? box.lo[out.facet.axis] : box.hi[out.facet.axis];
    CHECK(std::abs(out.point[out.facet.axis] - plane) <= cfg.boundary_tol * (std::abs(plane) + 1.0));
    CHECK(leaving_condition(field, out.facet, out.point));
  }
  CHECK(exits > 10);
}

// Time reversal: the backward trajectory from an exit point retraces to the
// entry point on the entry facet, in matching time.
TEST_CASE("reverse-flow round trip over random fields") {
  RngStream rng(417);
  int attempted = 0, ok = 0;
  while (attempted < 30) {
    const int n = 2 + static_cast<int>(rng.next_u64() % 2);
    Partition p;
    p.thresholds.assign(n, {});
    for (int ax = 0; ax < n; ++ax) p.thresholds[ax] = {0.0, rng.uniform(0.8, 2.0)};
    const RectIndex rect{std::vector<int>(n, 0)};
    const Box box = rect_bounds(rect, p);
    const MultiAffineField field = test::random_field(n, rng);

    // entry point on a random facet satisfying the entering condition
    const int axis = static_cast<int>(rng.next_u64() % n);
    const Side side = rng.next_u64() % 2 ? Side::upper : Side::lower;
    const FacetRef entry_facet{rect, axis, side};
    Vec x0(n);
    for (int j = 0; j < n; ++j) x0[j] = rng.uniform(box.lo[j] + 0.05, box.hi[j] - 0.05);
    x0[axis] = side == Side::lower ? box.lo[axis] : box.hi[axis];
    if (!entering_condition(field, entry_facet, x0)) continue;

    IntegratorConfig cfg = quick_cfg(1e-3, 30.0);
    const ExitOutcome fwd = simulate_in_rectangle(field, rect, p, x0, cfg);
    if (!fwd.exited()) continue;
    ++attempted;

    const ExitOutcome bwd = simulate_in_rectangle(negate_field(field), rect, p, fwd.point, cfg);
    if (!bwd.exited()) continue;
    const bool facet_match = bwd.facet.axis == entry_facet.axis && bwd.facet.side == entry_facet.side;
    const bool point_match = (bwd.point - x0).norm() <= 1e-4 * box.diameter();
    const bool time_match = std::abs(bwd.time - fwd.time) <= 1e-6 * std::max(1.0, fwd.time);
    if (facet_match && point_match && time_match) ++ok;
  }
  CHECK(ok >= attempted - 1);
}

TEST_CASE("enzyme trajectories conserve their linear invariants") {
  const BiochemicalSystem sys = builtin_model("enzyme");
  Vec x(4);
  x << 30.0, 95.0, 1.0, 1.0;  // S, E, ES, P
  const double e_total = x[1] + x[2];
  const double s_total = x[0] + x[2] + x[3];
  const double h = 1e-3;
  for (double t = 0.0; t < 50.0; t += h) {
    x = rk4_step(sys.field, x, h);
    REQUIRE(x.allFinite());
  }
  CHECK(x[1] + x[2] == doctest::Approx(e_total).epsilon(1e-6));
  CHECK(x[0] + x[2] + x[3] == doctest::Approx(s_total).epsilon(1e-6));
}

TEST_CASE("default integrator config clamps the step heuristic") {
  const BiochemicalSystem sys = builtin_model("oscillatory");
  const IntegratorConfig cfg = default_integrator_config(sys);
  CHECK(cfg.step >= 1e-6);
  CHECK(cfg.step <= 1e-1);
  // smallest side 1, max |f| at a phase-space corner = 210 (componentwise)
  CHECK(cfg.step == doctest::Approx(1e-3 * 1.0 / 210.0));
  cfg.validate();
}
