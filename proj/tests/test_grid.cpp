#include "oracles.hpp"

#include <griccati/grid.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

using namespace griccati;

TEST_CASE("linspace endpoints are exact", "[grid]") {
  const auto ax = linspace(-0.3, 0.7, 11);
  REQUIRE(ax.size() == 11);
  CHECK(ax.front() == -0.3);
  CHECK(ax.back() == 0.7);
  CHECK(axis_step(ax) == Catch::Approx(0.1).epsilon(1e-12));
  CHECK_THROWS_AS(linspace(0, 1, 1), ShapeError);
  CHECK_THROWS_AS(linspace(1, 0, 5), ShapeError);
}

TEST_CASE("axis_step rejects non-uniform spacing", "[grid]") {
  CHECK_THROWS_AS(axis_step({0.0}), ShapeError);
  CHECK_THROWS_AS(axis_step({0.0, 0.1, 0.3}), ShapeError);
  CHECK_THROWS_AS(axis_step({0.0, -0.1, -0.2}), ShapeError);
  CHECK(axis_step({1.0, 1.5, 2.0}) == Catch::Approx(0.5));
}

TEST_CASE("ravel and unravel are inverse bijections", "[grid]") {
  const Axes axes{linspace(0, 1, 3), linspace(0, 1, 4), linspace(0, 1, 2)};
  FieldOnGrid g(axes, 1, 1);
  REQUIRE(g.size() == 24);
  std::set<std::size_t> seen;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 2; ++k) {
        const std::size_t lin = g.ravel({i, j, k});
        CHECK(g.unravel(lin) == std::vector<int>{i, j, k});
        seen.insert(lin);
      }
  CHECK(seen.size() == 24);
  CHECK_THROWS_AS(g.ravel({3, 0, 0}), ShapeError);
  CHECK_THROWS_AS(g.ravel({0, 0}), ShapeError);
}

TEST_CASE("sampling a field stores exact values and coordinates", "[grid]") {
  const MatrixField p = polynomial_field(
      2, {Monomial{{1, 0}, CMatrix::Constant(1, 1, 1.0)},
          Monomial{{0, 2}, CMatrix::Constant(1, 1, Complex(0, 3))}});
  const Axes axes{linspace(0, 1, 5), linspace(-1, 1, 7)};
  const FieldOnGrid g = FieldOnGrid::sample(p, axes);
  for (std::size_t lin = 0; lin < g.size(); ++lin) {
    const Coords x = g.coords_of(lin);
    CHECK(max_abs(g.flat(lin) - p(x)) == 0.0);
  }
  CHECK(g.coords_at({0, 0}) == Coords{0.0, -1.0});
  CHECK(g.coords_at({4, 6}) == Coords{1.0, 1.0});
}

TEST_CASE("finite differences are exact on quadratics everywhere", "[grid]") {
  // f(x, y) = x^2 + 3xy: second-order stencils (interior and one-sided) are
  // exact for quadratics, including the boundary slabs.
  const MatrixField f = polynomial_field(
      2, {Monomial{{2, 0}, CMatrix::Constant(1, 1, 1.0)},
          Monomial{{1, 1}, CMatrix::Constant(1, 1, 3.0)}});
  const Axes axes{linspace(0, 1, 9), linspace(0, 1, 9)};
  const FieldOnGrid g = FieldOnGrid::sample(f, axes);
  const FieldOnGrid dx = partial_derivative(g, 0);
  const FieldOnGrid dy = partial_derivative(g, 1);
  for (std::size_t lin = 0; lin < g.size(); ++lin) {
    const Coords x = g.coords_of(lin);
    CHECK(std::abs(dx.flat(lin)(0, 0).real() - (2 * x[0] + 3 * x[1])) < 1e-12);
    CHECK(std::abs(dy.flat(lin)(0, 0).real() - 3 * x[0]) < 1e-12);
  }
}

TEST_CASE("finite-difference truncation on cubics has the stencil constants",
          "[grid]") {
  const MatrixField f =
      polynomial_field(1, {Monomial{{3}, CMatrix::Constant(1, 1, 1.0)}});
  const double h = 0.1;
  const Axes axes{linspace(0, 1, 11)};
  const FieldOnGrid g = FieldOnGrid::sample(f, axes);
  const FieldOnGrid d = partial_derivative(g, 0);
  // Central: (x+h)^3 - (x-h)^3 over 2h = 3x^2 + h^2.
  const double mid = d.at({5})(0, 0).real();
  CHECK(std::abs(mid - (3 * 0.25 + h * h)) < 1e-12);
  // One-sided at the left edge of x^3: error is exactly -2h^2.
  const double left = d.at({0})(0, 0).real();
  CHECK(std::abs(left - (-2 * h * h)) < 1e-12);
}

TEST_CASE("interior classification", "[grid]") {
  const Axes axes{linspace(0, 1, 4), linspace(0, 1, 3)};
  FieldOnGrid g(axes, 1, 1);
  CHECK(interior_index(g, {1, 1}, {0, 1}));
  CHECK_FALSE(interior_index(g, {0, 1}, {0, 1}));
  CHECK_FALSE(interior_index(g, {1, 2}, {0, 1}));
  // Only the listed axes matter.
  CHECK(interior_index(g, {1, 2}, {0}));
  CHECK(interior_index(g, {0, 1}, {1}));
}

TEST_CASE("partial_derivative input validation", "[grid]") {
  FieldOnGrid g(Axes{linspace(0, 1, 2)}, 1, 1);
  CHECK_THROWS_AS(partial_derivative(g, 0), ShapeError);  // needs three nodes
  FieldOnGrid g3(Axes{linspace(0, 1, 3)}, 1, 1);
  CHECK_THROWS_AS(partial_derivative(g3, 1), ShapeError);
}

TEST_CASE("residual reports merge by maximum", "[grid]") {
  ResidualReport rep;
  rep.add("alpha", 0.5);
  rep.add("beta", 2.0);
  rep.add("alpha", 1.5);
  rep.add("alpha", 0.25);  // smaller value must not lower the entry
  REQUIRE(rep.entries.size() == 2);
  CHECK(rep.get("alpha") == 1.5);
  CHECK(rep.get("beta") == 2.0);
  CHECK(rep.max_residual() == 2.0);
  CHECK(rep.has("beta"));
  CHECK_FALSE(rep.has("gamma"));
  CHECK_THROWS_AS(rep.get("gamma"), ShapeError);
}
