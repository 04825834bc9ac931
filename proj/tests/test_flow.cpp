#include "oracles.hpp"

#include <griccati/flow.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace griccati;

namespace {

MatrixField const_field_of(const CMatrix& m) { return constant_field(1, m); }

}  // namespace

TEST_CASE("constant coefficient flows reproduce the exponential", "[flow]") {
  const CMatrix lam = (0.8 * oracles::rand_matrix(3, 3, 5)).eval();
  const CMatrix want = oracles::exp_eigen(lam);
  const Interval iv{0.0, 1.0};

  const Trajectory rk = solve_linear_1d(const_field_of(lam), cidentity(3), iv,
                                        400, FlowSide::right, StepMethod::rk4);
  CHECK(oracles::rel_err(rk.back(), want) < 1e-10);

  // For a constant coefficient every midpoint-exponential step is exact, so
  // the group method hits the answer regardless of the step count.
  const Trajectory mg =
      solve_linear_1d(const_field_of(lam), cidentity(3), iv, 7,
                      FlowSide::right, StepMethod::magnus_midpoint);
  CHECK(oracles::rel_err(mg.back(), want) < 1e-13);

  // Left flow of the constant coefficient gives the same exponential.
  const Trajectory lf =
      solve_linear_1d(const_field_of(lam), cidentity(3), iv, 7, FlowSide::left,
                      StepMethod::magnus_midpoint);
  CHECK(oracles::rel_err(lf.back(), want) < 1e-13);

  CHECK(oracles::rel_err(path_ordered_exp(const_field_of(lam), iv, 400), want) <
        1e-10);
}

TEST_CASE("self-commuting coefficient: the group method is exact", "[flow]") {
  // lambda(x) = (1 + x) M commutes with itself at different times, so the
  // solution is exp((x + x^2/2) M); the midpoint rule integrates the linear
  // scalar prefactor exactly, making every step exact.
  const CMatrix m = (0.6 * oracles::rand_matrix(3, 3, 17)).eval();
  const MatrixField lam = polynomial_field(
      1, {Monomial{{0}, m}, Monomial{{1}, m}});
  const double x = 1.0;
  const CMatrix want = oracles::exp_eigen(((x + x * x / 2.0) * m).eval());
  const Trajectory mg = solve_linear_1d(lam, cidentity(3), {0.0, x}, 16,
                                        FlowSide::right,
                                        StepMethod::magnus_midpoint);
  CHECK(oracles::rel_err(mg.back(), want) < 1e-12);
}

TEST_CASE("rk4 converges at fourth order", "[flow]") {
  const CMatrix m1 = (0.5 * oracles::rand_matrix(2, 2, 23)).eval();
  const CMatrix m2 = (0.5 * oracles::rand_matrix(2, 2, 24)).eval();
  const MatrixField lam =
      polynomial_field(1, {Monomial{{0}, m1}, Monomial{{2}, m2}});
  const Interval iv{0.0, 1.0};
  const CMatrix ref =
      solve_linear_1d(lam, cidentity(2), iv, 3200, FlowSide::right).back();
  const double e100 = max_abs(
      solve_linear_1d(lam, cidentity(2), iv, 100, FlowSide::right).back() - ref);
  const double e200 = max_abs(
      solve_linear_1d(lam, cidentity(2), iv, 200, FlowSide::right).back() - ref);
  CHECK(e100 / e200 > 12.0);
  CHECK(e100 / e200 < 20.0);
}

TEST_CASE("left flow of -lambda inverts the right flow", "[flow]") {
  const CMatrix m1 = oracles::rand_matrix(3, 3, 33);
  const CMatrix m2 = oracles::rand_matrix(3, 3, 34);
  const MatrixField lam =
      polynomial_field(1, {Monomial{{0}, m1}, Monomial{{1}, m2}});
  const Interval iv{0.0, 0.8};
  const CMatrix right =
      solve_linear_1d(lam, cidentity(3), iv, 800, FlowSide::right).back();
  const CMatrix left =
      solve_linear_1d(scale(-1.0, lam), cidentity(3), iv, 800, FlowSide::left)
          .back();
  CHECK(max_abs(left * right - cidentity(3)) < 1e-9);
}

TEST_CASE("trajectory fields interpolate and differentiate the flow",
          "[flow]") {
  const CMatrix m = (0.7 * oracles::rand_matrix(2, 2, 44)).eval();
  const MatrixField lam = const_field_of(m);
  const Trajectory t =
      solve_linear_1d(lam, cidentity(2), {0.0, 1.0}, 50, FlowSide::right);
  const MatrixField psi = trajectory_field(t, lam);
  // Stored nodes are returned exactly.
  CHECK(max_abs(psi({t.nodes[20]}) - t.values[20]) == 0.0);
  // Off-node values agree with a much finer integration.
  const Trajectory fine =
      solve_linear_1d(lam, cidentity(2), {0.0, 1.0}, 4000, FlowSide::right);
  const double x = 0.513;
  const CMatrix ref = oracles::exp_eigen((x * m).eval());
  CHECK(max_abs(psi({x}) - ref) < 1e-7);
  CHECK(fine.nodes.size() == 4001);
  // The derivative field is the flow's right-hand side.
  const CMatrix d = psi.partial(0)({t.nodes[20]});
  CHECK(max_abs(d - t.values[20] * m) < 1e-13);
}

TEST_CASE("zero-curvature residual separates flat from non-flat families",
          "[flow]") {
  const Axes axes{linspace(0, 1, 4), linspace(0, 1, 4)};

  // Commuting constants: flat, evaluated with symbolic derivatives.
  CMatrix k = CMatrix::Zero(2, 2);
  k(1, 0) = 1.0;
  const std::vector<MatrixField> flat{constant_field(2, k),
                                      constant_field(2, (0.5 * k).eval())};
  const ResidualReport ok = zero_curvature_residual(flat, axes);
  CHECK(ok.max_residual() < 1e-15);
  CHECK(ok.meta.at("derivatives") == "symbolic");

  // Non-commuting constants: the residual is exactly the commutator norm.
  CMatrix e12 = CMatrix::Zero(2, 2);
  e12(0, 1) = 1.0;
  CMatrix e21 = CMatrix::Zero(2, 2);
  e21(1, 0) = 1.0;
  const std::vector<MatrixField> bad{constant_field(2, e12),
                                     constant_field(2, e21)};
  // [e12, e21] = diag(1, -1).
  CHECK(zero_curvature_residual(bad, axes).max_residual() ==
        Catch::Approx(1.0));

  // x-dependence that breaks the cross-derivative identity.
  const std::vector<MatrixField> skew{
      polynomial_field(2, {Monomial{{0, 1}, k}}), zero_field(2, 2, 2)};
  CHECK(zero_curvature_residual(skew, axes).get("curvature[0,1]") ==
        Catch::Approx(1.0));

  // A single field is vacuously flat.
  CHECK(zero_curvature_residual({constant_field(1, e12)}, {linspace(0, 1, 3)})
            .max_residual() == 0.0);
}

TEST_CASE("staircase integration fills the grid multiplicatively", "[flow]") {
  // Commuting diagonal constants: psi(x, y) = exp(x A) exp(y B).
  CMatrix a = CMatrix::Zero(2, 2);
  a(0, 0) = Complex(0.3, 0.1);
  a(1, 1) = -0.2;
  CMatrix b = CMatrix::Zero(2, 2);
  b(0, 0) = 0.5;
  b(1, 1) = Complex(0.0, -0.4);
  const std::vector<MatrixField> lams{constant_field(2, a),
                                      constant_field(2, b)};
  const Axes axes{linspace(0, 1, 5), linspace(0, 1, 5)};
  const FieldOnGrid g =
      solve_linear_md(lams, cidentity(2), axes, {0, 1}, FlowSide::right,
                      StepMethod::magnus_midpoint);
  for (std::size_t lin = 0; lin < g.size(); ++lin) {
    const Coords z = g.coords_of(lin);
    const CMatrix want =
        oracles::exp_eigen((z[0] * a).eval()) *
        oracles::exp_eigen((z[1] * b).eval());
    CHECK(max_abs(g.flat(lin) - want) < 1e-13);
  }

  // Axis order is immaterial for a commuting family.
  const FieldOnGrid swapped =
      solve_linear_md(lams, cidentity(2), axes, {1, 0}, FlowSide::right,
                      StepMethod::magnus_midpoint);
  double worst = 0.0;
  for (std::size_t lin = 0; lin < g.size(); ++lin)
    worst = std::max(worst, max_abs(g.flat(lin) - swapped.flat(lin)));
  CHECK(worst < 1e-13);

  // A non-flat family is flagged through the curvature gate metadata.
  CMatrix e12 = CMatrix::Zero(2, 2);
  e12(0, 1) = 1.0;
  CMatrix e21 = CMatrix::Zero(2, 2);
  e21(1, 0) = 1.0;
  const FieldOnGrid warned = solve_linear_md(
      {constant_field(2, e12), constant_field(2, e21)}, cidentity(2), axes,
      {0, 1}, FlowSide::right, StepMethod::rk4, 1, 1e-8);
  CHECK(warned.meta.count("curvature_warning") == 1);
  CHECK(g.meta.count("curvature_warning") == 0);
}

TEST_CASE("non-finite values raise divergence errors", "[flow]") {
  // The coefficient turns NaN past x = 0.5; the solver must locate it.
  const MatrixField lam(1, 1, 1, [](const Coords& x) {
    CMatrix m(1, 1);
    m(0, 0) = x[0] > 0.5 ? std::nan("") : 1.0;
    return m;
  });
  try {
    solve_linear_1d(lam, cidentity(1), {0.0, 1.0}, 10, FlowSide::right);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    REQUIRE(e.where().size() == 1);
    CHECK(e.where()[0] > 0.5);
    CHECK(e.where()[0] <= 1.0);
  }
  CHECK_THROWS_AS(
      solve_linear_md({constant_field(1, CMatrix::Constant(
                                             1, 1, Complex(std::nan(""), 0)))},
                      cidentity(1), {linspace(0, 1, 3)}, {0}, FlowSide::right),
      DivergenceError);
}

TEST_CASE("flow input validation", "[flow]") {
  const MatrixField lam = const_field_of(cidentity(2));
  CHECK_THROWS_AS(
      solve_linear_1d(lam, cidentity(2), {0.0, 1.0}, 0, FlowSide::right),
      ShapeError);
  CHECK_THROWS_AS(
      solve_linear_1d(lam, cidentity(2), {1.0, 1.0}, 5, FlowSide::right),
      ShapeError);
  CHECK_THROWS_AS(
      solve_linear_1d(lam, cidentity(3), {0.0, 1.0}, 5, FlowSide::right),
      ShapeError);
  CHECK_THROWS_AS(solve_linear_1d(constant_field(2, cidentity(2)),
                                  cidentity(2), {0.0, 1.0}, 5,
                                  FlowSide::right),
                  ShapeError);
  const Axes axes{linspace(0, 1, 3), linspace(0, 1, 3)};
  const std::vector<MatrixField> lams{constant_field(2, cidentity(2)),
                                      constant_field(2, cidentity(2))};
  CHECK_THROWS_AS(
      solve_linear_md(lams, cidentity(2), axes, {0, 0}, FlowSide::right),
      ShapeError);
  CHECK_THROWS_AS(
      solve_linear_md(lams, cidentity(2), axes, {0}, FlowSide::right),
      ShapeError);
  CHECK_THROWS_AS(solve_linear_md(lams, cidentity(2), axes, {0, 1},
                                  FlowSide::right, StepMethod::rk4, 0),
                  ShapeError);
}
