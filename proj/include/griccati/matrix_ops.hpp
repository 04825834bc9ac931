#pragma once

// Dense matrix utilities on top of Eigen: conditioning-checked inverse and a
// scaling-and-squaring exponential.  Matrix product/sum are Eigen operators.

#include "griccati/types.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace griccati {

// Largest / smallest singular value.
inline std::pair<double, double> singular_range(const CMatrix& a) {
  if (a.size() == 0) return {0.0, 0.0};
  Eigen::JacobiSVD<CMatrix> svd(a);
  const auto& sv = svd.singularValues();
  return {sv(0), sv(sv.size() - 1)};
}

inline double op_norm(const CMatrix& a) { return singular_range(a).first; }

// Inverse with an explicit conditioning gate: throws SingularError when
// sigma_min <= rcond_tol * sigma_max (or the matrix is exactly zero).
inline CMatrix inverse(const CMatrix& a, double rcond_tol = 1e-13) {
  if (a.rows() != a.cols()) throw ShapeError("inverse: matrix must be square");
  if (a.size() == 0) return a;
  if (!all_finite(a)) throw SingularError("inverse: non-finite entries");
  const auto [smax, smin] = singular_range(a);
  if (!(smax > 0.0) || smin <= rcond_tol * smax) {
    std::ostringstream os;
    os << "inverse: numerically singular (sigma_min=" << smin
       << ", sigma_max=" << smax << ")";
    throw SingularError(os.str());
  }
  return a.inverse();
}

inline double one_norm(const CMatrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().colwise().sum().maxCoeff();
}

// exp(x) by scaling-and-squaring around a Taylor kernel: x is halved until
// its 1-norm is <= 0.5, the series is summed to machine convergence, and the
// result is squared back.  Relative accuracy ~1e-14 for moderate norms.
inline CMatrix matexp(const CMatrix& x) {
  if (x.rows() != x.cols()) throw ShapeError("matexp: matrix must be square");
  const Eigen::Index n = x.rows();
  if (n == 0) return x;
  if (!all_finite(x)) throw DivergenceError("matexp: non-finite entries");

  int squarings = 0;
  double nrm = one_norm(x);
  while (nrm > 0.5 && squarings < 64) {
    nrm *= 0.5;
    ++squarings;
  }
  const CMatrix z = x / std::pow(2.0, squarings);

  CMatrix term = cidentity(n);
  CMatrix sum = cidentity(n);
  for (int k = 1; k <= 64; ++k) {
    term = (term * z) / static_cast<double>(k);
    sum += term;
    if (max_abs(term) <= 1e-18 * std::max(1.0, max_abs(sum))) break;
  }
  for (int k = 0; k < squarings; ++k) sum = sum * sum;
  return sum;
}

}  // namespace griccati
