#pragma once

// Closed-form solution families of the two- and three-block upper Riccati
// equation U' = B - A U + U D - U C U (blocks of lambda = [[A, B], [C, D]]),
// each obtained by integrating the associated linear flow exactly and
// factorizing:
//
//  * b_zero:        B = 0.   With Q' = Q A, R' = R D (path-ordered, from I)
//                   and S = int R C Q^-1,
//                   U(x) = Q^-1 (I + m S)^-1 m R.
//  * cb_equal:      square blocks, A = D = 0, C = B.  With F' = F B,
//                   H' = -H B,
//                   U = [F + H + m (F - H)]^-1 [F - H + m (F + H)].
//  * constant_bc:   A = D = 0, constant B and C.  With E = exp(x [[0,B],[C,0]]),
//                   U = (E11 + m E21)^-1 (E12 + m E22).
//  * three-block nilpotent: lambda strictly block-lower (three blocks); the
//                   flow is polynomial in iterated integrals S21, S32, S31.
//  * several variables, nilpotent: lambda_i = [[0,0],[C_i,0]] with
//                   C_i = d_i S; U = (I + m S)^-1 m.
//
// Every family reports blow-up exactly where the resolvent-style factor
// becomes singular.

#include "griccati/flow.hpp"
#include "griccati/gradation.hpp"
#include "griccati/quadrature.hpp"

namespace griccati {

namespace detail {

inline CMatrix resolve(const CMatrix& a, const Coords& where,
                       const char* family) {
  const auto [smax, smin] = singular_range(a);
  if (!(smax > 0.0) || smin <= 1e-12 * std::max(1.0, smax))
    throw BlowupError(std::string(family) + ": closed form singular at " +
                          coords_to_string(where),
                      where);
  return a.inverse();
}

inline std::vector<CMatrix> sample_line(const MatrixField& f,
                                        const std::vector<double>& nodes) {
  std::vector<CMatrix> out;
  out.reserve(nodes.size());
  for (double x : nodes) out.push_back(f({x}));
  return out;
}

}  // namespace detail

struct BZeroData {
  MatrixField A;  // n1 x n1
  MatrixField C;  // n2 x n1
  MatrixField D;  // n2 x n2
  CMatrix m;      // n1 x n2
};

// U at every node of the uniform partition of [0, x_max] into `steps` steps.
inline Trajectory solve_b_zero(const BZeroData& dat, double x_max, int steps) {
  const int n1 = static_cast<int>(dat.m.rows());
  const int n2 = static_cast<int>(dat.m.cols());
  if (dat.A.rows() != n1 || dat.A.cols() != n1 || dat.D.rows() != n2 ||
      dat.D.cols() != n2 || dat.C.rows() != n2 || dat.C.cols() != n1)
    throw ShapeError("solve_b_zero: inconsistent block shapes");
  if (!(x_max > 0) || steps < 2)
    throw ShapeError("solve_b_zero: need x_max > 0 and steps >= 2");

  const Interval iv{0.0, x_max};
  const Trajectory q = solve_linear_1d(dat.A, cidentity(n1), iv, steps,
                                       FlowSide::right);
  const Trajectory r = solve_linear_1d(dat.D, cidentity(n2), iv, steps,
                                       FlowSide::right);
  const double h = x_max / steps;
  std::vector<CMatrix> integrand(q.values.size());
  std::vector<CMatrix> qinv(q.values.size());
  for (std::size_t k = 0; k < q.values.size(); ++k) {
    qinv[k] = q.values[k].inverse();
    integrand[k] = r.values[k] * dat.C({q.nodes[k]}) * qinv[k];
  }
  const std::vector<CMatrix> s = cumulative_integral(integrand, h);

  Trajectory u;
  u.nodes = q.nodes;
  u.values.reserve(q.values.size());
  for (std::size_t k = 0; k < q.values.size(); ++k) {
    const CMatrix core = detail::resolve(
        (cidentity(n1) + dat.m * s[k]).eval(), {q.nodes[k]}, "b_zero");
    u.values.push_back(qinv[k] * core * dat.m * r.values[k]);
  }
  return u;
}

// Square blocks, A = D = 0, C = B.
inline Trajectory solve_cb_equal(const MatrixField& B, const CMatrix& m,
                                 double x_max, int steps) {
  const int n = static_cast<int>(m.rows());
  if (m.cols() != n || B.rows() != n || B.cols() != n)
    throw ShapeError("solve_cb_equal: blocks must be square and matching");
  const Interval iv{0.0, x_max};
  const Trajectory f =
      solve_linear_1d(B, cidentity(n), iv, steps, FlowSide::right);
  const Trajectory hh = solve_linear_1d(scale(-1.0, B), cidentity(n), iv,
                                        steps, FlowSide::right);
  Trajectory u;
  u.nodes = f.nodes;
  u.values.reserve(f.values.size());
  for (std::size_t k = 0; k < f.values.size(); ++k) {
    const CMatrix& F = f.values[k];
    const CMatrix& H = hh.values[k];
    const CMatrix den = F + H + m * (F - H);
    const CMatrix num = F - H + m * (F + H);
    u.values.push_back(detail::resolve(den, {f.nodes[k]}, "cb_equal") * num);
  }
  return u;
}

struct ConstantBCData {
  CMatrix B;  // n1 x n2
  CMatrix C;  // n2 x n1
  CMatrix m;  // n1 x n2
};

// Exponential blocks of [[0, B], [C, 0]] at parameter x.
inline std::array<CMatrix, 4> constant_bc_exp_blocks(const ConstantBCData& dat,
                                                     double x) {
  const int n1 = static_cast<int>(dat.B.rows());
  const int n2 = static_cast<int>(dat.B.cols());
  CMatrix lam = CMatrix::Zero(n1 + n2, n1 + n2);
  lam.block(0, n1, n1, n2) = dat.B;
  lam.block(n1, 0, n2, n1) = dat.C;
  const CMatrix e = matexp((x * lam).eval());
  return {e.block(0, 0, n1, n1), e.block(0, n1, n1, n2),
          e.block(n1, 0, n2, n1), e.block(n1, n1, n2, n2)};
}

inline CMatrix solve_constant_bc(const ConstantBCData& dat, double x) {
  const int n1 = static_cast<int>(dat.B.rows());
  const int n2 = static_cast<int>(dat.B.cols());
  if (dat.C.rows() != n2 || dat.C.cols() != n1 || dat.m.rows() != n1 ||
      dat.m.cols() != n2)
    throw ShapeError("solve_constant_bc: inconsistent block shapes");
  const auto e = constant_bc_exp_blocks(dat, x);
  const CMatrix den = e[0] + dat.m * e[2];
  const CMatrix num = e[1] + dat.m * e[3];
  return detail::resolve(den, {x}, "constant_bc") * num;
}

inline Trajectory solve_constant_bc_traj(const ConstantBCData& dat,
                                         double x_max, int steps) {
  Trajectory u;
  u.nodes = linspace(0.0, x_max, steps + 1);
  u.values.reserve(u.nodes.size());
  for (double x : u.nodes) u.values.push_back(solve_constant_bc(dat, x));
  return u;
}

struct ThreeBlockData {
  MatrixField C21;  // n2 x n1
  MatrixField C31;  // n3 x n1
  MatrixField C32;  // n3 x n2
  CMatrix m12, m13, m23;
};

// Strictly block-lower coefficient on three blocks; values are the full
// unit block-upper solutions (n x n).
inline Trajectory solve_three_block_nilpotent(const GradedContext& ctx,
                                              const ThreeBlockData& dat,
                                              double x_max, int steps) {
  if (ctx.blocks() != 3)
    throw ShapeError("solve_three_block_nilpotent: need exactly three blocks");
  const int n1 = ctx.block_size(0), n2 = ctx.block_size(1),
            n3 = ctx.block_size(2);
  if (dat.C21.rows() != n2 || dat.C21.cols() != n1 || dat.C31.rows() != n3 ||
      dat.C31.cols() != n1 || dat.C32.rows() != n3 || dat.C32.cols() != n2 ||
      dat.m12.rows() != n1 || dat.m12.cols() != n2 || dat.m13.rows() != n1 ||
      dat.m13.cols() != n3 || dat.m23.rows() != n2 || dat.m23.cols() != n3)
    throw ShapeError("solve_three_block_nilpotent: inconsistent block shapes");

  const auto nodes = linspace(0.0, x_max, steps + 1);
  const double h = x_max / steps;
  const auto c21 = detail::sample_line(dat.C21, nodes);
  const auto c31 = detail::sample_line(dat.C31, nodes);
  const auto c32 = detail::sample_line(dat.C32, nodes);
  const auto s21 = cumulative_integral(c21, h);
  const auto s32 = cumulative_integral(c32, h);
  // S31 = int (C31 + S32 * C21): the unit-lower flow's corner entry.
  std::vector<CMatrix> inner(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k)
    inner[k] = c31[k] + s32[k] * c21[k];
  const auto s31 = cumulative_integral(inner, h);

  Trajectory u;
  u.nodes = nodes;
  u.values.reserve(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const double x = nodes[k];
    const CMatrix kinv = detail::resolve(
        (cidentity(n1) + dat.m12 * s21[k] + dat.m13 * s31[k]).eval(), {x},
        "three_block");
    const CMatrix u12 = kinv * (dat.m12 + dat.m13 * s32[k]);
    const CMatrix u13 = kinv * dat.m13;
    const CMatrix t = s21[k] + dat.m23 * s31[k];
    const CMatrix den23 =
        cidentity(n2) + dat.m23 * s32[k] - t * u12;
    const CMatrix num23 = dat.m23 - t * u13;
    const CMatrix u23 = detail::resolve(den23, {x}, "three_block") * num23;

    CMatrix y = cidentity(ctx.dim());
    ctx.set_block(y, 0, 1, u12);
    ctx.set_block(y, 0, 2, u13);
    ctx.set_block(y, 1, 2, u23);
    u.values.push_back(y);
  }
  return u;
}

// Several variables, two blocks, strictly lower coefficients C_i = d_i S.
// The primitive S is recovered by staircase quadrature from the origin; the
// cross-derivative (curl) of the family is checked on a coarse sample box.
inline CMatrix solve_md_nilpotent(const std::vector<MatrixField>& C,
                                  const CMatrix& m, const Coords& point,
                                  int steps_per_axis = 64,
                                  double curl_tol = 1e-8) {
  const auto d = C.size();
  if (d == 0) throw ShapeError("solve_md_nilpotent: no coefficients");
  const int n2 = static_cast<int>(C[0].rows());
  const int n1 = static_cast<int>(C[0].cols());
  if (m.rows() != n1 || m.cols() != n2)
    throw ShapeError("solve_md_nilpotent: m shape mismatch");
  for (const auto& f : C)
    if (f.dim_in() != static_cast<int>(d) || f.rows() != n2 || f.cols() != n1)
      throw ShapeError("solve_md_nilpotent: coefficient shape mismatch");
  if (point.size() != d)
    throw ShapeError("solve_md_nilpotent: point arity mismatch");
  if (steps_per_axis < 2 || steps_per_axis % 2 != 0)
    throw ShapeError("solve_md_nilpotent: steps_per_axis must be even >= 2");

  // Compatibility: d_i C_j == d_j C_i on a coarse box spanned by the point.
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) {
      double worst = 0.0;
      const int probes = 4;
      for (int a = 0; a <= probes; ++a)
        for (int b = 0; b <= probes; ++b) {
          Coords x(point.size(), 0.0);
          for (std::size_t k = 0; k < d; ++k) x[k] = 0.5 * point[k];
          x[i] = point[i] * a / probes;
          x[j] = point[j] * b / probes;
          const double hi = std::max(1e-4, std::abs(point[i]) / 64.0);
          const double hj = std::max(1e-4, std::abs(point[j]) / 64.0);
          worst = std::max(
              worst, max_abs(C[j].partial_at(x, static_cast<int>(i), hi) -
                             C[i].partial_at(x, static_cast<int>(j), hj)));
        }
      if (worst > curl_tol) {
        std::ostringstream os;
        os << "solve_md_nilpotent: coefficients are not a gradient family "
              "(curl["
           << i << "," << j << "] = " << worst << ")";
        throw NotIntegrableError(os.str());
      }
    }

  // S(point) by staircase quadrature along each axis in turn.
  CMatrix s = CMatrix::Zero(n2, n1);
  Coords base(point.size(), 0.0);
  for (std::size_t a = 0; a < d; ++a) {
    if (point[a] != 0.0) {
      const auto nodes = linspace(std::min(0.0, point[a]),
                                  std::max(0.0, point[a]), steps_per_axis + 1);
      const double h = nodes[1] - nodes[0];
      std::vector<CMatrix> samples(nodes.size());
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        Coords x = base;
        x[a] = nodes[k];
        samples[k] = C[a](x);
      }
      const CMatrix seg = integrate(samples, h);
      s += point[a] > 0 ? seg : (-seg).eval();
    }
    base[a] = point[a];
  }
  const CMatrix core =
      detail::resolve((cidentity(n1) + m * s).eval(), point, "md_nilpotent");
  return core * m;
}

}  // namespace griccati
