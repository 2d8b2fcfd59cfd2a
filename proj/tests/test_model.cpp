#include <doctest.h>

#include <cmath>
#include <map>

#include "qdaa/model.hpp"
#include "support.hpp"

using namespace qdaa;

namespace {

const char* kOscillatoryDoc =
    "var X\n"
    "var Y\n"
    "eq X = 5*X - 1*X*Y\n"
    "eq Y = 0.4*X*Y - 5.4*Y\n"
    "thresholds X = 0 1 2 3 4 5 6 7 8 9 10 11 12 13 14 15 16 17 18 19 20 21 22 23 24 25 26 27 28 29 30\n"
    "thresholds Y = 0 1 2 3 4 5 6 7 8 9 10 11 12\n"
    "init X = [20, 21]\n"
    "init Y = [5, 6]\n";

Vec point2(double x, double y) {
  Vec p(2);
  p << x, y;
  return p;
}

// Collects coefficient-by-monomial, summing duplicates.
std::map<std::vector<int>, double> monomials(const std::vector<MultiAffineTerm>& terms) {
  std::map<std::vector<int>, double> out;
  for (const auto& t : terms) out[t.vars] += t.coefficient;
  return out;
}

}  // namespace

TEST_CASE("parse oscillatory document") {
  const BiochemicalSystem sys = parse_model(kOscillatoryDoc);
  CHECK(sys.dimension() == 2);
  CHECK(sys.variables == std::vector<std::string>{"X", "Y"});
  const auto& eq_x = sys.field.equations()[0];
  REQUIRE(eq_x.size() == 2);
  CHECK(eq_x[0].coefficient == 5.0);
  CHECK(eq_x[0].vars == std::vector<int>{0});
  CHECK(eq_x[1].coefficient == -1.0);
  CHECK(eq_x[1].vars == std::vector<int>{0, 1});
  CHECK(sys.partition.thresholds[0].size() == 31);
  CHECK(sys.partition.thresholds[1].size() == 13);
  REQUIRE(sys.initial.size() == 1);
  CHECK(sys.initial[0].idx == std::vector<int>{20, 5});
}

TEST_CASE("parse rejects malformed documents") {
  SUBCASE("repeated variable in a product is not multi-affine") {
    const std::string doc = "var X\neq X = 1*X*X\nthresholds X = 0 1\ninit X = [0, 1]\n";
    CHECK_THROWS_WITH_AS(parse_model(doc), doctest::Contains("non-multi-affine"), ParseError);
  }
  SUBCASE("degenerate threshold list") {
    const std::string doc = "var X\neq X = 1\nthresholds X = 5 5\ninit X = [5, 5]\n";
    CHECK_THROWS_WITH_AS(parse_model(doc), doctest::Contains("strictly increasing"), ParseError);
  }
  SUBCASE("init bound must be a threshold") {
    const std::string doc = "var X\neq X = 1\nthresholds X = 0 1 2\ninit X = [0, 1.5]\n";
    CHECK_THROWS_AS(parse_model(doc), ParseError);
  }
  SUBCASE("syntax error carries line and column") {
    const std::string doc = "var X\nwobble X = 1\n";
    try {
      parse_model(doc);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
      CHECK(e.column() >= 1);
    }
  }
  SUBCASE("unknown variable in equation") {
    const std::string doc = "var X\neq X = 1*Z\nthresholds X = 0 1\ninit X = [0, 1]\n";
    CHECK_THROWS_AS(parse_model(doc), ParseError);
  }
}

TEST_CASE("variables without an equation are constant species") {
  const std::string doc =
      "var X\nvar C\n"
      "eq X = 1*C\n"
      "thresholds X = 0 1 2\nthresholds C = 0 1\n"
      "init X = [0, 1]\ninit C = [0, 1]\n";
  const BiochemicalSystem sys = parse_model(doc);
  CHECK(sys.field.equations()[1].empty());
  const Vec f = sys.field(point2(0.5, 0.7));
  CHECK(f[0] == 0.7);
  CHECK(f[1] == 0.0);
}

TEST_CASE("JSON model form parses to the same system") {
  const std::string doc = R"({
    "variables": ["X", "Y"],
    "equations": {
      "X": [[5, ["X"]], [-1, ["X", "Y"]]],
      "Y": [[0.4, ["X", "Y"]], [-5.4, ["Y"]]]
    },
    "thresholds": {
      "X": [0,1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18,19,20,21,22,23,24,25,26,27,28,29,30],
      "Y": [0,1,2,3,4,5,6,7,8,9,10,11,12]
    },
    "init": {"X": [20, 21], "Y": [5, 6]}
  })";
  CHECK(parse_model(doc) == parse_model(kOscillatoryDoc));
}

TEST_CASE("eval_field") {
  const BiochemicalSystem sys = parse_model(kOscillatoryDoc);
  SUBCASE("oscillatory field at (20, 5)") {
    const Vec f = eval_field(sys.field, point2(20, 5));
    CHECK(f[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(f[1] == doctest::Approx(13.0).epsilon(1e-12));
  }
  SUBCASE("all products vanish at the origin, constants remain") {
    MultiAffineField field(2, {{{3.0, {}}, {7.0, {0, 1}}}, {{-2.0, {}}, {1.0, {1}}}});
    const Vec f = field(point2(0, 0));
    CHECK(f[0] == 3.0);
    CHECK(f[1] == -2.0);
  }
}

TEST_CASE("eval_field is affine in each coordinate") {
  RngStream rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_u64() % 3);
    const MultiAffineField field = test::random_field(n, rng);
    Vec a(n);
    for (int j = 0; j < n; ++j) a[j] = rng.uniform(0.0, 5.0);
    const int axis = static_cast<int>(rng.next_u64() % n);
    Vec b = a;
    b[axis] += rng.uniform(0.5, 3.0);
    Vec mid = a;
    mid[axis] = 0.5 * (a[axis] + b[axis]);
    const Vec expect = 0.5 * (field(a) + field(b));
    const Vec got = field(mid);
    for (int j = 0; j < n; ++j) CHECK(got[j] == doctest::Approx(expect[j]).epsilon(1e-12));
  }
}

TEST_CASE("negate_field") {
  const BiochemicalSystem sys = parse_model(kOscillatoryDoc);
  const MultiAffineField neg = negate_field(sys.field);
  SUBCASE("coefficients flip sign") {
    CHECK(neg.equations()[0][0].coefficient == -5.0);
    CHECK(neg.equations()[0][0].vars == std::vector<int>{0});
  }
  SUBCASE("negation is an involution") { CHECK(negate_field(neg) == sys.field); }
  SUBCASE("pointwise negation at random points") {
    RngStream rng(7);
    for (int i = 0; i < 100; ++i) {
      const Vec x = point2(rng.uniform(0, 30), rng.uniform(0, 12));
      const Vec f = sys.field(x);
      const Vec g = neg(x);
      CHECK(g[0] == doctest::Approx(-f[0]).epsilon(1e-15));
      CHECK(g[1] == doctest::Approx(-f[1]).epsilon(1e-15));
    }
  }
}

TEST_CASE("builtin oscillatory matches its published form") {
  const BiochemicalSystem sys = builtin_model("oscillatory");
  CHECK(sys.dimension() == 2);
  CHECK(sys.partition.thresholds[0].size() == 31);
  CHECK(sys.partition.thresholds[0].front() == 0.0);
  CHECK(sys.partition.thresholds[0].back() == 30.0);
  CHECK(sys.partition.thresholds[1].back() == 12.0);
  REQUIRE(sys.initial.size() == 1);
  CHECK(sys.initial[0].idx == std::vector<int>{20, 5});
  CHECK(sys == parse_model(kOscillatoryDoc));
}

TEST_CASE("builtin enzyme matches its published form") {
  const BiochemicalSystem sys = builtin_model("enzyme");
  CHECK(sys.dimension() == 4);
  const std::vector<double> expected{0.01, 5, 10, 15, 25, 50, 60, 85, 95, 100};
  for (int ax = 0; ax < 4; ++ax) CHECK(sys.partition.thresholds[ax] == expected);
  // P spans [0.01, 10] = two rectangles, the rest are single intervals
  CHECK(sys.initial.size() == 2);
}

TEST_CASE("enzyme conservation sums cancel term by term") {
  const BiochemicalSystem sys = builtin_model("enzyme");
  const auto& eq = sys.field.equations();
  const int S = 0, E = 1, ES = 2, P = 3;
  SUBCASE("dE + dES") {
    std::vector<MultiAffineTerm> sum = eq[E];
    sum.insert(sum.end(), eq[ES].begin(), eq[ES].end());
    for (const auto& [vars, coeff] : monomials(sum)) CHECK(coeff == 0.0);
  }
  SUBCASE("dS + dES + dP") {
    std::vector<MultiAffineTerm> sum = eq[S];
    sum.insert(sum.end(), eq[ES].begin(), eq[ES].end());
    sum.insert(sum.end(), eq[P].begin(), eq[P].end());
    for (const auto& [vars, coeff] : monomials(sum)) CHECK(coeff == 0.0);
  }
}

TEST_CASE("builtin ecoli") {
  SUBCASE("requires rate constants") {
    CHECK_THROWS_WITH_AS(builtin_model("ecoli"), doctest::Contains("rate constants"), std::invalid_argument);
  }
  SUBCASE("builds with user constants") {
    std::map<std::string, double> k;
    for (const char* name : {"k1", "k2", "k3", "k4", "k5", "k6", "k7", "k9"}) k[name] = 1.0;
    const BiochemicalSystem sys = builtin_model("ecoli", k);
    CHECK(sys.dimension() == 7);
    // constant species NH3ex and NH4ex keep empty equations
    CHECK(sys.field.equations()[0].empty());
    CHECK(sys.field.equations()[1].empty());
    sys.partition.validate();
    CHECK(sys.initial.size() == 20);
  }
  SUBCASE("rejects unknown constants") {
    std::map<std::string, double> k;
    for (const char* name : {"k1", "k2", "k3", "k4", "k5", "k6", "k7", "k9"}) k[name] = 1.0;
    k["k77"] = 1.0;
    CHECK_THROWS_AS(builtin_model("ecoli", k), std::invalid_argument);
  }
}

TEST_CASE("unknown builtin name") { CHECK_THROWS_AS(builtin_model("lorenz"), std::invalid_argument); }

TEST_CASE("print/parse round trip") {
  for (const char* name : {"oscillatory", "enzyme"}) {
    const BiochemicalSystem sys = builtin_model(name);
    CHECK(parse_model(print_model(sys)) == sys);
  }
  std::map<std::string, double> k;
  for (const char* name : {"k1", "k2", "k3", "k4", "k5", "k6", "k7", "k9"}) k[name] = 0.5 + k.size();
  const BiochemicalSystem ecoli = builtin_model("ecoli", k);
  CHECK(parse_model(print_model(ecoli)) == ecoli);
}

TEST_CASE("model hash is stable and configuration sensitive") {
  CHECK(model_hash(builtin_model("oscillatory")) == model_hash(builtin_model("oscillatory")));
  CHECK(model_hash(builtin_model("oscillatory")) != model_hash(builtin_model("enzyme")));
}
