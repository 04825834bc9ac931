#pragma once

// Matrix Riccati equations of graded type.  For a graded context the unknown
// is a unit block-triangular matrix y and the equation couples y to a
// coefficient lambda through the grade projections:
//
//   upper side:  y' =  P_{>0}(y * lambda * y^-1) * y     (y unit block-upper)
//   lower side:  w' = -w * P_{<0}(w^-1 * lambda * w)     (w unit block-lower)
//
// For two blocks and y = [[I, U], [0, I]], lambda = [[A, B], [C, D]], the
// upper equation is the classical U' = B - A U + U D - U C U; the lower one
// is U' = -C + U A - D U + U B U for w = [[I, 0], [U, I]].
//
// Both sides linearize: the upper side is the unit-upper Gauss factor of the
// right flow psi' = psi * lambda, the lower side the unit-lower factor of
// psi' = -lambda * psi.  Blow-up of the Riccati solution is exactly loss of
// the factorization chart.

#include "griccati/flow.hpp"
#include "griccati/gauss.hpp"
#include "griccati/gradation.hpp"

namespace griccati {

enum class RiccatiSide { upper, lower };

// Replace near-zero structural parts by exact zeros and near-identity
// diagonal blocks by the exact identity, so that solutions stay on the chart
// bitwise.  Inputs farther than `tol` from the chart are rejected.
inline CMatrix unit_snap(const GradedContext& ctx, const CMatrix& y,
                         RiccatiSide side, double tol = 1e-9) {
  ctx.check_shape(y);
  const bool ok = side == RiccatiSide::upper ? ctx.is_unit_upper(y, tol)
                                             : ctx.is_unit_lower(y, tol);
  if (!ok)
    throw ShapeError(
        "unit_snap: matrix is not unit block-triangular on the requested side");
  const GradePart keep =
      side == RiccatiSide::upper ? GradePart::positive : GradePart::negative;
  return cidentity(ctx.dim()) + ctx.project(y, keep);
}

struct RiccatiProblem {
  GradedContext ctx;
  std::vector<MatrixField> lambda;  // one field per variable
  CMatrix initial;                  // unit block-triangular on `side`
  RiccatiSide side = RiccatiSide::upper;

  void validate() const {
    if (lambda.empty()) throw ShapeError("RiccatiProblem: no coefficient field");
    const int d = lambda[0].dim_in();
    for (const auto& f : lambda) {
      if (f.dim_in() != d)
        throw ShapeError("RiccatiProblem: mixed coefficient arities");
      if (f.rows() != ctx.dim() || f.cols() != ctx.dim())
        throw ShapeError("RiccatiProblem: coefficient shape mismatch");
    }
    if (static_cast<int>(lambda.size()) != d)
      throw ShapeError("RiccatiProblem: need one coefficient per variable");
    ctx.check_shape(initial);
    unit_snap(ctx, initial, side);  // throws when off the chart
  }
  CMatrix snapped_initial() const { return unit_snap(ctx, initial, side); }
};

// Projected right-hand side.
inline CMatrix riccati_rhs(const GradedContext& ctx, const CMatrix& lam,
                           const CMatrix& y, RiccatiSide side) {
  if (side == RiccatiSide::upper)
    return ctx.project(y * lam * y.inverse(), GradePart::positive) * y;
  return (-y * ctx.project(y.inverse() * lam * y, GradePart::negative)).eval();
}

namespace detail {

inline void check_riccati_value(const CMatrix& y, const Coords& where,
                                double blow_limit) {
  if (!all_finite(y) || max_abs(y) > blow_limit)
    throw BlowupError(
        "riccati: solution left its chart near " + coords_to_string(where),
        where);
}

inline CMatrix triangular_factor(const GradedContext& ctx, const CMatrix& psi,
                                 RiccatiSide side, const Coords& where) {
  try {
    const GaussFactors f = gauss_decompose(ctx, psi);
    return side == RiccatiSide::upper ? f.upper : f.lower;
  } catch (const NotDecomposableError& e) {
    throw BlowupError("riccati: factorization chart lost near " +
                          coords_to_string(where) + " (" + e.what() + ")",
                      where);
  }
}

}  // namespace detail

// Direct RK4 integration of the projected equation (one variable).
inline Trajectory solve_direct(const RiccatiProblem& p, Interval iv, int steps,
                               double blow_limit = 1e8) {
  p.validate();
  if (p.lambda.size() != 1)
    throw ShapeError("solve_direct: problem has several variables");
  const auto& lam = p.lambda[0];
  if (steps < 1) throw ShapeError("solve_direct: steps must be positive");
  const double h = (iv.hi - iv.lo) / steps;
  Trajectory t;
  t.side = FlowSide::right;
  CMatrix y = p.snapped_initial();
  t.nodes.push_back(iv.lo);
  t.values.push_back(y);
  for (int k = 0; k < steps; ++k) {
    const double x = iv.lo + k * h;
    y = detail::rk4_step(
        [&](double xx, const CMatrix& yy) {
          return riccati_rhs(p.ctx, lam({xx}), yy, p.side);
        },
        x, y, h);
    const double xn = k + 1 == steps ? iv.hi : iv.lo + (k + 1) * h;
    detail::check_riccati_value(y, {xn}, blow_limit);
    t.nodes.push_back(xn);
    t.values.push_back(y);
  }
  return t;
}

// Solve by linearization: integrate the associated linear flow from the same
// initial value and project through the triangular factorization at every
// node.  Upper side pairs with psi' = psi * lambda, lower side with
// psi' = -lambda * psi.
inline Trajectory solve_by_linearization(const RiccatiProblem& p, Interval iv,
                                         int steps,
                                         StepMethod method = StepMethod::rk4) {
  p.validate();
  if (p.lambda.size() != 1)
    throw ShapeError("solve_by_linearization: problem has several variables");
  const bool upper = p.side == RiccatiSide::upper;
  const MatrixField lam =
      upper ? p.lambda[0] : scale(-1.0, p.lambda[0]);
  const FlowSide side = upper ? FlowSide::right : FlowSide::left;
  const Trajectory lin =
      solve_linear_1d(lam, p.snapped_initial(), iv, steps, side, method);
  Trajectory out;
  out.side = lin.side;
  out.nodes = lin.nodes;
  out.values.reserve(lin.values.size());
  for (std::size_t k = 0; k < lin.values.size(); ++k)
    out.values.push_back(detail::triangular_factor(p.ctx, lin.values[k],
                                                   p.side, {lin.nodes[k]}));
  return out;
}

// Staircase versions for a commuting family over a rectangular grid.
inline FieldOnGrid solve_direct_md(const RiccatiProblem& p, const Axes& axes,
                                   const std::vector<int>& axis_order,
                                   int substeps = 1, double blow_limit = 1e8) {
  p.validate();
  const auto d = axes.size();
  if (p.lambda.size() != d)
    throw ShapeError("solve_direct_md: one coefficient per axis");
  if (axis_order.size() != d)
    throw ShapeError("solve_direct_md: axis_order must list every axis");
  if (substeps < 1) throw ShapeError("solve_direct_md: substeps >= 1");

  const int n = p.ctx.dim();
  FieldOnGrid g(axes, n, n);
  std::vector<int> origin(d, 0);
  g.at(origin) = p.snapped_initial();
  std::vector<int> processed;
  for (int a : axis_order) {
    const auto& ax = axes[static_cast<std::size_t>(a)];
    std::vector<int> idx(d, 0);
    std::size_t count = 1;
    for (int pa : processed) count *= axes[static_cast<std::size_t>(pa)].size();
    for (std::size_t b = 0; b < count; ++b) {
      std::size_t rem = b;
      for (int pa : processed) {
        const auto len = axes[static_cast<std::size_t>(pa)].size();
        idx[static_cast<std::size_t>(pa)] = static_cast<int>(rem % len);
        rem /= len;
      }
      idx[static_cast<std::size_t>(a)] = 0;
      CMatrix y = g.at(idx);
      Coords base = g.coords_at(idx);
      const MatrixField line =
          restrict_field(p.lambda[static_cast<std::size_t>(a)], base, {a});
      for (std::size_t k = 0; k + 1 < ax.size(); ++k) {
        const double x0 = ax[k];
        const double h = (ax[k + 1] - ax[k]) / substeps;
        for (int s = 0; s < substeps; ++s)
          y = detail::rk4_step(
              [&](double xx, const CMatrix& yy) {
                return riccati_rhs(p.ctx, line({xx}), yy, p.side);
              },
              x0 + s * h, y, h);
        Coords where = base;
        where[static_cast<std::size_t>(a)] = ax[k + 1];
        detail::check_riccati_value(y, where, blow_limit);
        idx[static_cast<std::size_t>(a)] = static_cast<int>(k + 1);
        g.at(idx) = y;
      }
      idx[static_cast<std::size_t>(a)] = 0;
    }
    processed.push_back(a);
  }
  return g;
}

inline FieldOnGrid solve_linearized_md(const RiccatiProblem& p,
                                       const Axes& axes,
                                       const std::vector<int>& axis_order,
                                       StepMethod method = StepMethod::rk4,
                                       int substeps = 1) {
  p.validate();
  const bool upper = p.side == RiccatiSide::upper;
  std::vector<MatrixField> lams;
  lams.reserve(p.lambda.size());
  for (const auto& f : p.lambda)
    lams.push_back(upper ? f : scale(-1.0, f));
  const FieldOnGrid lin =
      solve_linear_md(lams, p.snapped_initial(), axes,
                      axis_order, upper ? FlowSide::right : FlowSide::left,
                      method, substeps);
  FieldOnGrid out(axes, p.ctx.dim(), p.ctx.dim());
  out.meta = lin.meta;
  for (std::size_t i = 0; i < lin.size(); ++i)
    out.flat(i) = detail::triangular_factor(p.ctx, lin.flat(i), p.side,
                                            lin.coords_of(i));
  return out;
}

// Finite-difference defect of a gridded solution against the projected
// equation, evaluated at nodes interior to every axis.
inline ResidualReport riccati_grid_residual(
    const GradedContext& ctx, const FieldOnGrid& y,
    const std::vector<MatrixField>& lams, RiccatiSide side) {
  if (lams.size() != static_cast<std::size_t>(y.dim()))
    throw ShapeError("riccati_grid_residual: one coefficient per axis");
  ResidualReport rep;
  std::vector<int> all_axes(static_cast<std::size_t>(y.dim()));
  for (int a = 0; a < y.dim(); ++a) all_axes[static_cast<std::size_t>(a)] = a;
  for (int a = 0; a < y.dim(); ++a) {
    const FieldOnGrid dy = partial_derivative(y, a);
    double worst = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const auto idx = y.unravel(i);
      if (!interior_index(y, idx, {a})) continue;
      const Coords x = y.coords_of(i);
      const CMatrix rhs =
          riccati_rhs(ctx, lams[static_cast<std::size_t>(a)](x), y.flat(i), side);
      worst = std::max(worst, max_abs(dy.flat(i) - rhs));
    }
    rep.add("defect[" + std::to_string(a) + "]", worst);
  }
  return rep;
}

// Gauge action on coefficients: lambda'_i = chi lambda_i chi^-1 - (d_i chi) chi^-1.
inline std::vector<MatrixField> gauge_transform(
    const std::vector<MatrixField>& lams, const MatrixField& chi) {
  std::vector<MatrixField> out;
  out.reserve(lams.size());
  const MatrixField chi_inv = inverse_field(chi);
  for (std::size_t i = 0; i < lams.size(); ++i)
    out.push_back(chi * lams[i] * chi_inv -
                  chi.partial(static_cast<int>(i)) * chi_inv);
  return out;
}

// Covariance of the one-variable upper equation under a block-diagonal gauge
// field chi: solving the transformed problem from the transformed initial
// value must match the conjugated base solution node by node.
inline ResidualReport gauge_covariance_check(const RiccatiProblem& p,
                                             const MatrixField& chi,
                                             Interval iv, int steps) {
  p.validate();
  if (p.lambda.size() != 1)
    throw ShapeError("gauge_covariance_check: one-variable problems only");
  const Trajectory base = solve_by_linearization(p, iv, steps);
  const auto transformed_lams = gauge_transform(p.lambda, chi);
  RiccatiProblem q{p.ctx, transformed_lams, CMatrix(), p.side};
  const CMatrix chi0 = chi({iv.lo});
  q.initial = chi0 * p.initial * chi0.inverse();
  const Trajectory moved = solve_by_linearization(q, iv, steps);
  double worst = 0.0;
  for (std::size_t k = 0; k < base.values.size(); ++k) {
    const CMatrix c = chi({base.nodes[k]});
    worst = std::max(worst,
                     max_abs(moved.values[k] - c * base.values[k] * c.inverse()));
  }
  ResidualReport rep;
  rep.add("covariance", worst);
  return rep;
}

// Dense-output field view of a one-variable Riccati trajectory; its
// derivative field is the projected right-hand side.
inline MatrixField riccati_trajectory_field(const Trajectory& t,
                                            const GradedContext& ctx,
                                            const MatrixField& lam,
                                            RiccatiSide side) {
  if (t.nodes.size() < 2)
    throw ShapeError("riccati_trajectory_field: too few nodes");
  const double lo = t.nodes.front();
  const double h = t.step();
  const auto n = t.nodes.size();
  auto shared = std::make_shared<Trajectory>(t);
  auto eval = [shared, ctx, lam, lo, h, n, side](const Coords& c) {
    const double x = c[0];
    double pos = (x - lo) / h;
    auto k = static_cast<std::ptrdiff_t>(pos + 0.5);
    if (k < 0) k = 0;
    if (k >= static_cast<std::ptrdiff_t>(n)) k = static_cast<std::ptrdiff_t>(n) - 1;
    const double xk = shared->nodes[static_cast<std::size_t>(k)];
    const CMatrix& yk = shared->values[static_cast<std::size_t>(k)];
    if (x == xk) return yk;
    return detail::rk4_step(
        [&](double xx, const CMatrix& yy) {
          return riccati_rhs(ctx, lam({xx}), yy, side);
        },
        xk, yk, x - xk);
  };
  const int r = static_cast<int>(t.values.front().rows());
  const int c = static_cast<int>(t.values.front().cols());
  MatrixField base(1, r, c, eval);
  return MatrixField(
      1, r, c, eval,
      [base, ctx, lam, side](int) {
        return MatrixField(1, base.rows(), base.cols(),
                           [base, ctx, lam, side](const Coords& x) {
                             return riccati_rhs(ctx, lam(x), base(x), side);
                           });
      },
      false);
}

}  // namespace griccati
