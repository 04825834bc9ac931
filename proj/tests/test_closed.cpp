#include "oracles.hpp"

#include <griccati/closed.hpp>
#include <griccati/riccati.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace griccati;

namespace {

// Assemble the two-block coefficient [[A, B], [C, D]] from 1-variable fields.
MatrixField two_block(const MatrixField& a, const MatrixField& b,
                      const MatrixField& c, const MatrixField& d) {
  return block_field({{a, b}, {c, d}});
}

MatrixField rand_poly(int rows, int cols, unsigned seed, double scale) {
  return polynomial_field(
      1, {Monomial{{0}, (scale * oracles::rand_matrix(rows, cols, seed)).eval()},
          Monomial{{1},
                   (scale * oracles::rand_matrix(rows, cols, seed + 1)).eval()}});
}

}  // namespace

TEST_CASE("vanishing top-right block integrates by quadrature", "[closed]") {
  const GradedContext ctx({2, 2});
  const MatrixField A = rand_poly(2, 2, 301, 0.4);
  const MatrixField C = rand_poly(2, 2, 303, 0.5);
  const MatrixField D = rand_poly(2, 2, 305, 0.4);
  const CMatrix m = 0.4 * oracles::rand_matrix(2, 2, 307);
  const BZeroData dat{A, C, D, m};
  const Trajectory closed = solve_b_zero(dat, 1.0, 400);

  const MatrixField lam = two_block(A, zero_field(1, 2, 2), C, D);
  CMatrix y0 = cidentity(4);
  y0.block(0, 2, 2, 2) = m;
  const RiccatiProblem p{ctx, {lam}, y0, RiccatiSide::upper};
  const Trajectory direct = solve_direct(p, {0.0, 1.0}, 400);
  const Trajectory lin = solve_by_linearization(p, {0.0, 1.0}, 400);

  double vs_direct = 0.0, vs_lin = 0.0;
  for (std::size_t k = 0; k < closed.values.size(); ++k) {
    vs_direct = std::max(vs_direct, max_abs(closed.values[k] -
                                            ctx.block(direct.values[k], 0, 1)));
    vs_lin = std::max(vs_lin, max_abs(closed.values[k] -
                                      ctx.block(lin.values[k], 0, 1)));
  }
  CHECK(vs_direct < 1e-8);
  CHECK(vs_lin < 1e-8);
}

TEST_CASE("quadrature family reports the exact pole", "[closed]") {
  // Scalar, A = D = 0, C = 1, m = -2: U = -2 / (1 - 2x), singular at 1/2.
  // The node grid contains 1/2 exactly and the resolvent factor vanishes
  // bitwise there.
  const BZeroData dat{zero_field(1, 1, 1),
                      constant_field(1, cidentity(1)),
                      zero_field(1, 1, 1),
                      (-2.0 * cidentity(1)).eval()};
  try {
    solve_b_zero(dat, 2.0, 4);
    FAIL("expected BlowupError");
  } catch (const BlowupError& e) {
    REQUIRE(e.where().size() == 1);
    CHECK(e.where()[0] == 0.5);
  }
}

TEST_CASE("equal off-diagonal blocks reduce to hyperbolic flows", "[closed]") {
  // Scalar oracle: B = C = 1 gives U = tanh(x + atanh m).
  const double m = 0.3;
  const Trajectory u = solve_cb_equal(constant_field(1, cidentity(1)),
                                      (m * cidentity(1)).eval(), 1.2, 400);
  for (std::size_t k = 0; k < u.nodes.size(); ++k) {
    const double want = std::tanh(u.nodes[k] + std::atanh(m));
    CHECK(std::abs(u.values[k](0, 0).real() - want) < 1e-10);
  }

  // Matrix case against the linearized integrator.
  const GradedContext ctx({2, 2});
  const MatrixField B = rand_poly(2, 2, 311, 0.5);
  const CMatrix m2 = 0.3 * oracles::rand_matrix(2, 2, 313);
  const Trajectory closed = solve_cb_equal(B, m2, 1.0, 400);
  const MatrixField lam = two_block(zero_field(1, 2, 2), B, B,
                                    zero_field(1, 2, 2));
  CMatrix y0 = cidentity(4);
  y0.block(0, 2, 2, 2) = m2;
  const RiccatiProblem p{ctx, {lam}, y0, RiccatiSide::upper};
  const Trajectory lin = solve_by_linearization(p, {0.0, 1.0}, 400);
  double worst = 0.0;
  for (std::size_t k = 0; k < closed.values.size(); ++k)
    worst = std::max(worst, max_abs(closed.values[k] -
                                    ctx.block(lin.values[k], 0, 1)));
  CHECK(worst < 1e-8);
}

TEST_CASE("constant off-diagonal blocks match their power series", "[closed]") {
  const CMatrix B = 0.6 * oracles::rand_matrix(2, 3, 321);
  const CMatrix C = 0.6 * oracles::rand_matrix(3, 2, 322);
  const CMatrix m = 0.3 * oracles::rand_matrix(2, 3, 323);
  const ConstantBCData dat{B, C, m};
  for (double x : {0.2, 0.5, 1.0}) {
    const auto e = constant_bc_exp_blocks(dat, x);
    const auto s = oracles::bc_series_blocks(B, C, x, 20);
    for (int k = 0; k < 4; ++k) CHECK(max_abs(e[k] - s[k]) < 1e-12);
    const CMatrix want =
        (s[0] + m * s[2]).inverse() * (s[1] + m * s[3]);
    CHECK(max_abs(solve_constant_bc(dat, x) - want) < 1e-10);
  }
}

TEST_CASE("constant blocks of opposite sign give the tangent", "[closed]") {
  const ConstantBCData dat{cidentity(1), (-1.0 * cidentity(1)).eval(),
                           czero(1, 1)};
  CHECK(std::abs(solve_constant_bc(dat, 1.0)(0, 0).real() - std::tan(1.0)) <
        1e-12);
  const double half_pi = std::acos(-1.0) / 2;
  CHECK_THROWS_AS(solve_constant_bc(dat, half_pi), BlowupError);

  const Trajectory traj = solve_constant_bc_traj(dat, 1.0, 10);
  REQUIRE(traj.nodes.size() == 11);
  CHECK(std::abs(traj.values[5](0, 0).real() - std::tan(0.5)) < 1e-13);
}

TEST_CASE("three-block nilpotent coefficients integrate in closed form",
          "[closed]") {
  const GradedContext ctx({1, 2, 1});
  const ThreeBlockData dat{rand_poly(2, 1, 331, 0.6),
                           rand_poly(1, 1, 333, 0.6),
                           rand_poly(1, 2, 335, 0.6),
                           0.5 * oracles::rand_matrix(1, 2, 337),
                           0.5 * oracles::rand_matrix(1, 1, 338),
                           0.5 * oracles::rand_matrix(2, 1, 339)};
  const Trajectory closed = solve_three_block_nilpotent(ctx, dat, 1.0, 400);

  const MatrixField z11 = zero_field(1, 1, 1);
  const MatrixField lam = block_field(
      {{z11, zero_field(1, 1, 2), z11},
       {dat.C21, zero_field(1, 2, 2), zero_field(1, 2, 1)},
       {dat.C31, dat.C32, z11}});
  CMatrix y0 = cidentity(4);
  ctx.set_block(y0, 0, 1, dat.m12);
  ctx.set_block(y0, 0, 2, dat.m13);
  ctx.set_block(y0, 1, 2, dat.m23);
  const RiccatiProblem p{ctx, {lam}, y0, RiccatiSide::upper};
  const Trajectory lin = solve_by_linearization(p, {0.0, 1.0}, 400);

  double worst = 0.0;
  for (std::size_t k = 0; k < closed.values.size(); ++k) {
    CHECK(ctx.is_unit_upper(closed.values[k], 0.0));
    worst = std::max(worst, max_abs(closed.values[k] - lin.values[k]));
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("three-block family reports the exact pole", "[closed]") {
  const GradedContext ctx({1, 1, 1});
  const MatrixField z = zero_field(1, 1, 1);
  // S21 = x and m12 = -2: the leading resolvent vanishes bitwise at x = 1/2.
  const ThreeBlockData dat{constant_field(1, cidentity(1)), z, z,
                           (-2.0 * cidentity(1)).eval(), czero(1, 1),
                           czero(1, 1)};
  try {
    solve_three_block_nilpotent(ctx, dat, 2.0, 4);
    FAIL("expected BlowupError");
  } catch (const BlowupError& e) {
    CHECK(e.where()[0] == 0.5);
  }
}

TEST_CASE("gradient families in several variables solve exactly", "[closed]") {
  // C_0 = [[x1, x0]], C_1 = [[x0, -1]] is the gradient of
  // S = [[x0 x1, x0^2/2 - x1]]; the staircase quadrature is exact on
  // polynomials of this degree, including at negative coordinates.
  CMatrix r1 = czero(1, 2), r2 = czero(1, 2), r3 = czero(1, 2);
  r1(0, 0) = 1.0;
  r2(0, 1) = 1.0;
  r3(0, 1) = -1.0;
  const MatrixField c0 = polynomial_field(
      2, {Monomial{{0, 1}, r1}, Monomial{{1, 0}, r2}});
  const MatrixField c1 = polynomial_field(
      2, {Monomial{{1, 0}, r1}, Monomial{{0, 0}, r3}});
  const CMatrix m = 0.7 * oracles::rand_matrix(2, 1, 341);

  const Coords pt{0.7, -0.4};
  CMatrix s = czero(1, 2);
  s(0, 0) = pt[0] * pt[1];
  s(0, 1) = 0.5 * pt[0] * pt[0] - pt[1];
  const CMatrix want = (cidentity(2) + m * s).inverse() * m;
  CHECK(max_abs(solve_md_nilpotent({c0, c1}, m, pt) - want) < 1e-13);
}

TEST_CASE("non-gradient families are rejected", "[closed]") {
  CMatrix r1 = czero(1, 2), r2 = czero(1, 2);
  r1(0, 0) = 1.0;
  r2(0, 1) = 1.0;
  const MatrixField c0 = polynomial_field(2, {Monomial{{0, 1}, r1}});
  const MatrixField c1 = polynomial_field(2, {Monomial{{0, 1}, r2}});
  const CMatrix m = czero(2, 1);
  CHECK_THROWS_AS(solve_md_nilpotent({c0, c1}, m, {0.5, 0.5}),
                  NotIntegrableError);
}

TEST_CASE("closed-form entry points validate their inputs", "[closed]") {
  const MatrixField z = zero_field(1, 1, 1);
  CHECK_THROWS_AS(solve_b_zero({z, z, z, czero(1, 1)}, 0.0, 10), ShapeError);
  CHECK_THROWS_AS(solve_b_zero({z, z, z, czero(2, 1)}, 1.0, 10), ShapeError);
  CHECK_THROWS_AS(solve_cb_equal(zero_field(1, 2, 2), czero(2, 1), 1.0, 10),
                  ShapeError);
  CHECK_THROWS_AS(
      solve_constant_bc({czero(1, 2), czero(1, 2), czero(1, 2)}, 0.5),
      ShapeError);
  const MatrixField c = constant_field(2, czero(1, 2));
  CHECK_THROWS_AS(solve_md_nilpotent({c, c}, czero(2, 1), {0.5, 0.5}, 3),
                  ShapeError);
  CHECK_THROWS_AS(solve_md_nilpotent({c, c}, czero(1, 2), {0.5, 0.5}),
                  ShapeError);
  CHECK_THROWS_AS(solve_md_nilpotent({c, c}, czero(2, 1), {0.5}), ShapeError);
  CHECK_THROWS_AS(solve_md_nilpotent({}, czero(2, 1), {}), ShapeError);
}
