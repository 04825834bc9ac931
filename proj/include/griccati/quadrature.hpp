#pragma once

// Cumulative quadrature of uniformly sampled matrix-valued integrands.
// Even nodes use composite Simpson panels; odd nodes add a single half-panel
// via the three-point Newton-Cotes rule, so every prefix integral is
// available at third/fourth order without re-integration.

#include "griccati/types.hpp"

namespace griccati {

// S[k] ~= integral of f over [x_0, x_k] for samples f[k] at spacing h.
inline std::vector<CMatrix> cumulative_integral(const std::vector<CMatrix>& f,
                                                double h) {
  const std::size_t n = f.size();
  if (n == 0) throw ShapeError("cumulative_integral: empty sample set");
  std::vector<CMatrix> s(n);
  s[0] = CMatrix::Zero(f[0].rows(), f[0].cols());
  if (n == 1) return s;
  if (n == 2) {  // only a trapezoid is available
    s[1] = (h / 2.0) * (f[0] + f[1]);
    return s;
  }
  for (std::size_t k = 1; k < n; ++k) {
    if (k % 2 == 0) {
      s[k] = s[k - 2] + (h / 3.0) * (f[k - 2] + 4.0 * f[k - 1] + f[k]);
    } else if (k + 1 < n) {
      s[k] = s[k - 1] + (h / 12.0) * (5.0 * f[k - 1] + 8.0 * f[k] - f[k + 1]);
    } else {  // final odd node: lean on the two samples to the left
      s[k] = s[k - 1] + (h / 12.0) * (-f[k - 2] + 8.0 * f[k - 1] + 5.0 * f[k]);
    }
  }
  return s;
}

inline CMatrix integrate(const std::vector<CMatrix>& f, double h) {
  return cumulative_integral(f, h).back();
}

}  // namespace griccati
