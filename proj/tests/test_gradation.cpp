#include "oracles.hpp"

#include <griccati/gradation.hpp>

#include <catch2/catch_amalgamated.hpp>

using namespace griccati;

TEST_CASE("context geometry: dimensions, offsets, grades", "[gradation]") {
  const GradedContext ctx({2, 3, 1});
  CHECK(ctx.dim() == 6);
  CHECK(ctx.blocks() == 3);
  CHECK(ctx.offset(0) == 0);
  CHECK(ctx.offset(1) == 2);
  CHECK(ctx.offset(2) == 5);
  CHECK(ctx.block_size(1) == 3);
  CHECK(GradedContext::grade(0, 2) == 2);
  CHECK(GradedContext::grade(2, 0) == -2);
  CHECK(GradedContext::grade(1, 1) == 0);
}

TEST_CASE("context rejects malformed partitions", "[gradation]") {
  CHECK_THROWS_AS(GradedContext({4}), ShapeError);
  CHECK_THROWS_AS(GradedContext({2, 0, 1}), ShapeError);
  CHECK_THROWS_AS(GradedContext({2, -1}), ShapeError);
  const GradedContext ctx({1, 2});
  CHECK_THROWS_AS(ctx.check_shape(CMatrix::Zero(2, 3)), ShapeError);
  CHECK_THROWS_AS(ctx.block(CMatrix::Zero(3, 3), 0, 2), ShapeError);
}

TEST_CASE("grade projections partition the matrix", "[gradation]") {
  const GradedContext ctx({1, 2, 1});
  const CMatrix a = oracles::rand_matrix(4, 4, 101);
  const CMatrix neg = ctx.project(a, GradePart::negative);
  const CMatrix zer = ctx.project(a, GradePart::zero);
  const CMatrix pos = ctx.project(a, GradePart::positive);
  CHECK(max_abs(neg + zer + pos - a) == 0.0);
  CHECK(max_abs(ctx.project(a, GradePart::nonpositive) - (neg + zer)) == 0.0);
  CHECK(max_abs(ctx.project(a, GradePart::nonnegative) - (zer + pos)) == 0.0);

  // Grade components sum to the full matrix and are supported exactly on the
  // blocks of their grade.
  CMatrix sum = CMatrix::Zero(4, 4);
  for (int m = -2; m <= 2; ++m) sum += ctx.grade_component(a, m);
  CHECK(max_abs(sum - a) == 0.0);

  const CMatrix g1 = ctx.grade_component(a, 1);
  for (int r = 0; r < ctx.blocks(); ++r)
    for (int s = 0; s < ctx.blocks(); ++s) {
      const CMatrix blk = ctx.block(g1, r, s);
      if (s - r == 1)
        CHECK(max_abs(blk - ctx.block(a, r, s)) == 0.0);
      else
        CHECK(max_abs(blk) == 0.0);
    }
}

TEST_CASE("block access round-trips through set_block", "[gradation]") {
  const GradedContext ctx({2, 2});
  CMatrix a = CMatrix::Zero(4, 4);
  const CMatrix b = oracles::rand_matrix(2, 2, 7);
  ctx.set_block(a, 0, 1, b);
  CHECK(max_abs(ctx.block(a, 0, 1) - b) == 0.0);
  CHECK(max_abs(ctx.block(a, 1, 0)) == 0.0);
  CHECK_THROWS_AS(ctx.set_block(a, 0, 1, CMatrix::Zero(1, 2)), ShapeError);
}

TEST_CASE("structure predicates detect the triangular charts", "[gradation]") {
  const GradedContext ctx({2, 1});
  CMatrix u = cidentity(3);
  u(0, 2) = Complex(0.5, -0.25);
  u(1, 2) = 2.0;
  CHECK(ctx.is_unit_upper(u));
  CHECK_FALSE(ctx.is_unit_lower(u));
  CHECK_FALSE(ctx.is_block_diagonal(u));

  CMatrix l = cidentity(3);
  l(2, 0) = -1.5;
  CHECK(ctx.is_unit_lower(l));
  CHECK_FALSE(ctx.is_unit_upper(l));

  CMatrix d = CMatrix::Zero(3, 3);
  d.block(0, 0, 2, 2) = oracles::rand_matrix(2, 2, 3);
  d(2, 2) = 4.0;
  CHECK(ctx.is_block_diagonal(d));

  // Tolerance semantics: small off-chart noise passes only with a gate.
  u(2, 0) = 1e-12;
  CHECK_FALSE(ctx.is_unit_upper(u));
  CHECK(ctx.is_unit_upper(u, 1e-10));
}
