#pragma once

// Independent reference computations for the test suite.  Nothing here calls
// the library's factorization or exponential kernels: the LDU oracle is a
// scalar Doolittle elimination regrouped into block factors, the exponential
// oracle goes through an eigendecomposition, and the series oracle sums the
// even/odd hyperbolic blocks term by term.

#include <griccati/gauss.hpp>
#include <griccati/gradation.hpp>
#include <griccati/types.hpp>

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <random>
#include <stdexcept>

namespace oracles {

using griccati::CMatrix;
using griccati::Complex;

// Deterministic uniform draw in [-1, 1] from the raw mt19937 word sequence
// (the standard distribution classes are not bit-portable across libraries).
inline double unit_draw(std::mt19937& eng) {
  return (static_cast<double>(eng()) / 4294967296.0) * 2.0 - 1.0;
}

inline CMatrix rand_matrix(int rows, int cols, unsigned seed,
                           double scale = 1.0, bool complex_entries = true) {
  std::mt19937 eng(seed);
  CMatrix a(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double re = unit_draw(eng);
      const double im = complex_entries ? unit_draw(eng) : 0.0;
      a(r, c) = scale * Complex(re, im);
    }
  return a;
}

// Identity plus a small random perturbation: every leading minor is far from
// singular, so unpivoted elimination is safe.
inline CMatrix well_conditioned(int n, unsigned seed, double spread = 0.4) {
  return griccati::cidentity(n) + spread * rand_matrix(n, n, seed);
}

inline double rel_err(const CMatrix& got, const CMatrix& want) {
  return griccati::max_abs((got - want).eval()) /
         std::max(1.0, griccati::max_abs(want));
}

// ---- scalar LDU oracle -------------------------------------------------------

struct ScalarLDU {
  CMatrix L;  // unit lower triangular
  CMatrix D;  // diagonal
  CMatrix U;  // unit upper triangular
};

// Unpivoted Doolittle elimination; requires nonzero leading minors.
inline ScalarLDU scalar_ldu(const CMatrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("scalar_ldu: square only");
  const Eigen::Index n = a.rows();
  ScalarLDU f{griccati::cidentity(n), CMatrix::Zero(n, n),
              griccati::cidentity(n)};
  CMatrix w = a;
  for (Eigen::Index k = 0; k < n; ++k) {
    const Complex piv = w(k, k);
    if (std::abs(piv) == 0.0)
      throw std::runtime_error("scalar_ldu: zero pivot");
    f.D(k, k) = piv;
    for (Eigen::Index i = k + 1; i < n; ++i) f.L(i, k) = w(i, k) / piv;
    for (Eigen::Index j = k + 1; j < n; ++j) f.U(k, j) = w(k, j) / piv;
    for (Eigen::Index i = k + 1; i < n; ++i)
      for (Eigen::Index j = k + 1; j < n; ++j)
        w(i, j) -= f.L(i, k) * piv * f.U(k, j);
  }
  return f;
}

// The diagonal blocks of a matrix for a block partition given by offsets.
inline CMatrix keep_diagonal_blocks(const CMatrix& a,
                                    const std::vector<int>& sizes) {
  CMatrix out = CMatrix::Zero(a.rows(), a.cols());
  int off = 0;
  for (int s : sizes) {
    out.block(off, off, s, s) = a.block(off, off, s, s);
    off += s;
  }
  return out;
}

// Regroup the scalar factors into block factors: with bd(X) the diagonal
// blocks of X,
//   lower = L * bd(L)^{-1},  zero = bd(L) * D * bd(U),  upper = bd(U)^{-1} * U.
// The product telescopes back to L*D*U = a, and each factor has the right
// block structure, so by uniqueness these are the block Gauss factors.
inline griccati::GaussFactors block_factors_via_ldu(
    const griccati::GradedContext& ctx, const CMatrix& a) {
  const ScalarLDU f = scalar_ldu(a);
  const CMatrix bl = keep_diagonal_blocks(f.L, ctx.block_sizes());
  const CMatrix bu = keep_diagonal_blocks(f.U, ctx.block_sizes());
  return {f.L * bl.inverse(), bl * f.D * bu, bu.inverse() * f.U};
}

// ---- exponential oracle --------------------------------------------------------

// exp through an eigendecomposition; accurate for matrices with a
// well-conditioned eigenbasis (random dense matrices qualify).
inline CMatrix exp_eigen(const CMatrix& a) {
  Eigen::ComplexEigenSolver<CMatrix> es(a);
  const CMatrix v = es.eigenvectors();
  Eigen::VectorXcd e = es.eigenvalues();
  for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = std::exp(e(i));
  return v * e.asDiagonal() * v.inverse();
}

// ---- hyperbolic series oracle ---------------------------------------------------

// Blocks of exp(x [[0, B], [C, 0]]) summed as even/odd series:
//   E11 = sum x^{2k} (BC)^k / (2k)!        E12 = sum x^{2k+1} (BC)^k B / (2k+1)!
//   E21 = sum x^{2k+1} (CB)^k C / (2k+1)!  E22 = sum x^{2k} (CB)^k / (2k)!
inline std::array<CMatrix, 4> bc_series_blocks(const CMatrix& B,
                                               const CMatrix& C, double x,
                                               int terms = 20) {
  const Eigen::Index n1 = B.rows();
  const Eigen::Index n2 = B.cols();
  const CMatrix bc = B * C;
  const CMatrix cb = C * B;
  CMatrix t11 = griccati::cidentity(n1);
  CMatrix t22 = griccati::cidentity(n2);
  CMatrix t12 = (x * B).eval();
  CMatrix t21 = (x * C).eval();
  CMatrix e11 = t11, e12 = t12, e21 = t21, e22 = t22;
  const double x2 = x * x;
  for (int k = 0; k + 1 < terms; ++k) {
    const double even = (2.0 * k + 1.0) * (2.0 * k + 2.0);
    const double odd = (2.0 * k + 2.0) * (2.0 * k + 3.0);
    t11 = (x2 / even) * (bc * t11);
    t22 = (x2 / even) * (cb * t22);
    t12 = (x2 / odd) * (bc * t12);
    t21 = (x2 / odd) * (cb * t21);
    e11 += t11;
    e22 += t22;
    e12 += t12;
    e21 += t21;
  }
  return {e11, e12, e21, e22};
}

}  // namespace oracles
