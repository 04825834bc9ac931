#pragma once

// Two-sided field constructions on a graded context.  Coordinates split into
// d "minus" variables (axes 0..d-1) and d "plus" variables (axes d..2d-1).
// The data consist of block-diagonal chiral factors gamma_-(z^-), gamma_+(z^+),
// grade -1 / +1 chiral constraint currents c_{-i}(z^-), c_{+i}(z^+), and
// triangular chiral dressings xi_-(z^+) (unit block-lower), xi_+(z^-)
// (unit block-upper).
//
// The construction integrates the commuting flows
//   d_{-i} mu_- = mu_- (gamma_- c_{-i} gamma_-^{-1}),
//   d_{+i} mu_+ = mu_+ (gamma_+ c_{+i} gamma_+^{-1}),
// factorizes mu_+^{-1} mu_- = nu_- eta nu_+^{-1} node by node, and forms the
// block-diagonal field gamma = gamma_+^{-1} eta gamma_-.  That field solves
// the generalized Toda equations, expressed here as flatness of the
// connection
//   omega_{-i} = c_{-i} + gamma^{-1} d_{-i} gamma,
//   omega_{+i} = gamma^{-1} c_{+i} gamma.
// The chiral-sector factorization also produces the full group-valued field
//   psi = xi_-^{-1} gamma_+^{-1} mu_+^{-1} mu_- gamma_- xi_+,
// whose mixed derivatives of chiral currents vanish and whose triangular
// Gauss factors satisfy the constrained-current relations.
//
// Independently, the same data define coefficient families
//   lambda_{-i} = xi_+^{-1} (c_{-i} + gamma_-^{-1} d_{-i} gamma_-) xi_+
//                 + xi_+^{-1} d_{-i} xi_+           (depends on z^- only)
//   lambda_{+i} = xi_-^{-1} (c_{+i} + gamma_+^{-1} d_{+i} gamma_+) xi_-
//                 + xi_-^{-1} d_{+i} xi_-           (depends on z^+ only)
// whose graded Riccati equations (upper side along z^-, lower side along z^+)
// are solved in closed form by resolvent expressions in mu_-, mu_+ for the
// two-block case.

#include "griccati/flow.hpp"
#include "griccati/gauss.hpp"
#include "griccati/gradation.hpp"
#include "griccati/riccati.hpp"

#include <cmath>
#include <optional>
#include <sstream>

namespace griccati {

struct TodaData {
  GradedContext ctx;
  int d = 1;                         // chiral variables per side
  MatrixField gamma_minus;           // block-diagonal, z^- chiral
  MatrixField gamma_plus;            // block-diagonal, z^+ chiral
  std::vector<MatrixField> c_minus;  // grade -1, z^- chiral
  std::vector<MatrixField> c_plus;   // grade +1, z^+ chiral
  MatrixField xi_minus;              // unit block-lower, z^+ chiral
  MatrixField xi_plus;               // unit block-upper, z^- chiral

  int coords() const noexcept { return 2 * d; }
  std::vector<int> minus_axes() const {
    std::vector<int> a(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) a[static_cast<std::size_t>(i)] = i;
    return a;
  }
  std::vector<int> plus_axes() const {
    std::vector<int> a(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) a[static_cast<std::size_t>(i)] = d + i;
    return a;
  }

  void check_shapes() const {
    const int n = ctx.dim();
    const int dc = coords();
    auto need = [&](const MatrixField& f, const char* what) {
      if (!f.valid()) throw ShapeError(std::string("TodaData: missing ") + what);
      if (f.dim_in() != dc || f.rows() != n || f.cols() != n)
        throw ShapeError(std::string("TodaData: bad shape for ") + what);
    };
    if (d < 1) throw ShapeError("TodaData: d must be positive");
    need(gamma_minus, "gamma_minus");
    need(gamma_plus, "gamma_plus");
    need(xi_minus, "xi_minus");
    need(xi_plus, "xi_plus");
    if (static_cast<int>(c_minus.size()) != d ||
        static_cast<int>(c_plus.size()) != d)
      throw ShapeError("TodaData: need d currents per chirality");
    for (const auto& f : c_minus) need(f, "c_minus");
    for (const auto& f : c_plus) need(f, "c_plus");
  }

  // The commuting coefficient families of the mu flows.
  std::vector<MatrixField> rho_minus() const {
    std::vector<MatrixField> out;
    out.reserve(static_cast<std::size_t>(d));
    for (const auto& c : c_minus) out.push_back(conjugated_by(c, gamma_minus));
    return out;
  }
  std::vector<MatrixField> rho_plus() const {
    std::vector<MatrixField> out;
    out.reserve(static_cast<std::size_t>(d));
    for (const auto& c : c_plus) out.push_back(conjugated_by(c, gamma_plus));
    return out;
  }
};

// ---- data validation --------------------------------------------------------

// Sampled diagnostics of the structural preconditions.  Every entry should be
// at rounding level for admissible data; the caller applies gates.
inline ResidualReport validate_toda_data(const TodaData& data,
                                         const Axes& minus_axes,
                                         const Axes& plus_axes) {
  data.check_shapes();
  if (static_cast<int>(minus_axes.size()) != data.d ||
      static_cast<int>(plus_axes.size()) != data.d)
    throw ShapeError("validate_toda_data: need d axes per side");
  Axes full = minus_axes;
  full.insert(full.end(), plus_axes.begin(), plus_axes.end());
  FieldOnGrid probe(full, 1, 1);
  const auto& ctx = data.ctx;
  const int n = ctx.dim();
  ResidualReport rep;

  std::vector<double> steps;
  for (const auto& ax : full)
    steps.push_back(ax.size() >= 2 ? axis_step(ax) : 1e-6);

  auto chiral = [&](const MatrixField& f, bool minus_chiral,
                    const std::string& label) {
    double worst = 0.0;
    for (std::size_t lin = 0; lin < probe.size(); ++lin) {
      const Coords x = probe.coords_of(lin);
      for (int i = 0; i < data.d; ++i) {
        const int axis = minus_chiral ? data.d + i : i;  // the frozen side
        worst = std::max(worst, max_abs(f.partial_at(
                                    x, axis,
                                    steps[static_cast<std::size_t>(axis)])));
      }
    }
    rep.add(label, worst);
  };
  chiral(data.gamma_minus, true, "chiral(gamma-)");
  chiral(data.gamma_plus, false, "chiral(gamma+)");
  chiral(data.xi_plus, true, "chiral(xi+)");
  chiral(data.xi_minus, false, "chiral(xi-)");
  for (const auto& c : data.c_minus) chiral(c, true, "chiral(c-)");
  for (const auto& c : data.c_plus) chiral(c, false, "chiral(c+)");

  double diag_m = 0, diag_p = 0, grade_m = 0, grade_p = 0, chart_m = 0,
         chart_p = 0, comm_m = 0, comm_p = 0;
  for (std::size_t lin = 0; lin < probe.size(); ++lin) {
    const Coords x = probe.coords_of(lin);
    const CMatrix gm = data.gamma_minus(x);
    const CMatrix gp = data.gamma_plus(x);
    diag_m = std::max(diag_m, max_abs(gm - ctx.project(gm, GradePart::zero)));
    diag_p = std::max(diag_p, max_abs(gp - ctx.project(gp, GradePart::zero)));
    const CMatrix xm = data.xi_minus(x);
    const CMatrix xp = data.xi_plus(x);
    chart_m = std::max(
        chart_m, std::max(max_abs(ctx.project(xm, GradePart::positive)),
                          max_abs(ctx.project(xm, GradePart::zero) -
                                  cidentity(n))));
    chart_p = std::max(
        chart_p, std::max(max_abs(ctx.project(xp, GradePart::negative)),
                          max_abs(ctx.project(xp, GradePart::zero) -
                                  cidentity(n))));
    std::vector<CMatrix> cm, cp;
    for (const auto& c : data.c_minus) cm.push_back(c(x));
    for (const auto& c : data.c_plus) cp.push_back(c(x));
    for (const auto& c : cm)
      grade_m = std::max(grade_m, max_abs(c - ctx.grade_component(c, -1)));
    for (const auto& c : cp)
      grade_p = std::max(grade_p, max_abs(c - ctx.grade_component(c, +1)));
    for (std::size_t i = 0; i < cm.size(); ++i)
      for (std::size_t j = i + 1; j < cm.size(); ++j) {
        comm_m = std::max(comm_m, max_abs(cm[i] * cm[j] - cm[j] * cm[i]));
        comm_p = std::max(comm_p, max_abs(cp[i] * cp[j] - cp[j] * cp[i]));
      }
  }
  rep.add("diagonal(gamma-)", diag_m);
  rep.add("diagonal(gamma+)", diag_p);
  rep.add("grade(c-)", grade_m);
  rep.add("grade(c+)", grade_p);
  rep.add("chart(xi-)", chart_m);
  rep.add("chart(xi+)", chart_p);
  if (data.d >= 2) {
    rep.add("commute(c-)", comm_m);
    rep.add("commute(c+)", comm_p);
  }

  // Compatibility (flatness) of the dressed current families, sampled on the
  // chiral sub-grids.
  Coords origin;
  for (const auto& ax : full) origin.push_back(ax.front());
  if (data.d >= 2) {
    std::vector<MatrixField> rm, rp;
    for (const auto& f : data.rho_minus())
      rm.push_back(restrict_field(f, origin, data.minus_axes()));
    for (const auto& f : data.rho_plus())
      rp.push_back(restrict_field(f, origin, data.plus_axes()));
    rep.add("compatible(-)", zero_curvature_residual(rm, minus_axes).max_residual());
    rep.add("compatible(+)", zero_curvature_residual(rp, plus_axes).max_residual());
  } else {
    rep.add("compatible(-)", 0.0);
    rep.add("compatible(+)", 0.0);
  }
  return rep;
}

// ---- the construction -------------------------------------------------------

struct TodaSolution {
  int d = 1;
  FieldOnGrid mu_minus;  // over the minus axes
  FieldOnGrid mu_plus;   // over the plus axes
  FieldOnGrid nu_minus;  // over the full axes (unit block-lower)
  FieldOnGrid nu_plus;   // over the full axes (unit block-upper)
  FieldOnGrid eta;       // over the full axes (block-diagonal)
  FieldOnGrid gamma;     // over the full axes (block-diagonal)
  bool partial = false;  // true when some nodes lost the factorization chart
  std::vector<Coords> chart_failures;
};

inline TodaSolution construct_solution(const TodaData& data,
                                       const Axes& minus_axes,
                                       const Axes& plus_axes, int substeps = 1,
                                       double compat_gate = 1e-8) {
  data.check_shapes();
  if (static_cast<int>(minus_axes.size()) != data.d ||
      static_cast<int>(plus_axes.size()) != data.d)
    throw ShapeError("construct_solution: need d axes per side");
  const auto& ctx = data.ctx;
  const int n = ctx.dim();

  Axes full = minus_axes;
  full.insert(full.end(), plus_axes.begin(), plus_axes.end());
  Coords origin;
  for (const auto& ax : full) origin.push_back(ax.front());

  std::vector<MatrixField> rm, rp;
  for (const auto& f : data.rho_minus())
    rm.push_back(restrict_field(f, origin, data.minus_axes()));
  for (const auto& f : data.rho_plus())
    rp.push_back(restrict_field(f, origin, data.plus_axes()));

  if (data.d >= 2 && compat_gate >= 0.0) {
    const double cm = zero_curvature_residual(rm, minus_axes).max_residual();
    const double cp = zero_curvature_residual(rp, plus_axes).max_residual();
    if (cm > compat_gate || cp > compat_gate) {
      std::ostringstream os;
      os << "construct_solution: dressed currents are not compatible "
            "(minus curl "
         << cm << ", plus curl " << cp << ", gate " << compat_gate << ")";
      throw IntegrabilityError(os.str());
    }
  }

  std::vector<int> order(static_cast<std::size_t>(data.d));
  for (int i = 0; i < data.d; ++i) order[static_cast<std::size_t>(i)] = i;

  TodaSolution sol;
  sol.d = data.d;
  sol.mu_minus =
      solve_linear_md(rm, cidentity(n), minus_axes, order, FlowSide::right,
                      StepMethod::magnus_midpoint, substeps);
  sol.mu_plus =
      solve_linear_md(rp, cidentity(n), plus_axes, order, FlowSide::right,
                      StepMethod::magnus_midpoint, substeps);

  sol.nu_minus = FieldOnGrid(full, n, n);
  sol.nu_plus = FieldOnGrid(full, n, n);
  sol.eta = FieldOnGrid(full, n, n);
  sol.gamma = FieldOnGrid(full, n, n);

  const CMatrix nan_fill =
      CMatrix::Constant(n, n, Complex(std::nan(""), std::nan("")));
  for (std::size_t lin = 0; lin < sol.gamma.size(); ++lin) {
    const auto idx = sol.gamma.unravel(lin);
    const std::vector<int> midx(idx.begin(), idx.begin() + data.d);
    const std::vector<int> pidx(idx.begin() + data.d, idx.end());
    const Coords z = sol.gamma.coords_of(lin);
    const CMatrix g = sol.mu_plus.at(pidx).inverse() * sol.mu_minus.at(midx);
    try {
      const GaussFactors f = gauss_decompose(ctx, g);
      sol.nu_minus.flat(lin) = f.lower;
      sol.eta.flat(lin) = f.zero;
      sol.nu_plus.flat(lin) = f.upper.inverse();  // g = nu_- eta nu_+^{-1}
      sol.gamma.flat(lin) =
          data.gamma_plus(z).inverse() * f.zero * data.gamma_minus(z);
    } catch (const NotDecomposableError&) {
      sol.partial = true;
      if (sol.chart_failures.size() < 16) sol.chart_failures.push_back(z);
      sol.nu_minus.flat(lin) = nan_fill;
      sol.eta.flat(lin) = nan_fill;
      sol.nu_plus.flat(lin) = nan_fill;
      sol.gamma.flat(lin) = nan_fill;
    }
  }
  if (sol.partial) {
    sol.gamma.meta["chart_failures"] =
        std::to_string(sol.chart_failures.size());
  }
  return sol;
}

// ---- residual checkers ------------------------------------------------------

namespace detail {

// Pointwise inverse with NaN pass-through (partial solutions).
inline CMatrix soft_inverse(const CMatrix& a) {
  if (!all_finite(a)) return a;
  return a.inverse();
}

}  // namespace detail

// Flatness of the connection built from a Toda field gamma and the chiral
// currents; entries are grouped by the chirality of the differentiated pair.
// Finite differences act on interior nodes; windows touching invalid (NaN)
// nodes are skipped and counted in the metadata.
inline ResidualReport toda_residual(const GradedContext& ctx, int d,
                                    const FieldOnGrid& gamma,
                                    const std::vector<MatrixField>& c_minus,
                                    const std::vector<MatrixField>& c_plus) {
  if (gamma.dim() != 2 * d)
    throw ShapeError("toda_residual: gamma grid must have 2d axes");
  if (static_cast<int>(c_minus.size()) != d ||
      static_cast<int>(c_plus.size()) != d)
    throw ShapeError("toda_residual: need d currents per chirality");

  // omega grids.
  std::vector<FieldOnGrid> omega;  // first d: minus components, then plus
  std::vector<FieldOnGrid> dgamma(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i)
    dgamma[static_cast<std::size_t>(i)] = partial_derivative(gamma, i);
  for (int i = 0; i < d; ++i) {
    FieldOnGrid w(gamma.axes(), gamma.rows(), gamma.cols());
    for (std::size_t lin = 0; lin < gamma.size(); ++lin) {
      const Coords z = gamma.coords_of(lin);
      w.flat(lin) = c_minus[static_cast<std::size_t>(i)](z) +
                    detail::soft_inverse(gamma.flat(lin)) *
                        dgamma[static_cast<std::size_t>(i)].flat(lin);
    }
    omega.push_back(std::move(w));
  }
  for (int i = 0; i < d; ++i) {
    FieldOnGrid w(gamma.axes(), gamma.rows(), gamma.cols());
    for (std::size_t lin = 0; lin < gamma.size(); ++lin) {
      const Coords z = gamma.coords_of(lin);
      w.flat(lin) = detail::soft_inverse(gamma.flat(lin)) *
                    c_plus[static_cast<std::size_t>(i)](z) * gamma.flat(lin);
    }
    omega.push_back(std::move(w));
  }

  ResidualReport rep;
  std::size_t skipped = 0;
  auto pair_residual = [&](int ai, int aj, const std::string& label) {
    const FieldOnGrid di_wj = partial_derivative(omega[static_cast<std::size_t>(aj)], ai);
    const FieldOnGrid dj_wi = partial_derivative(omega[static_cast<std::size_t>(ai)], aj);
    double worst = 0.0;
    for (std::size_t lin = 0; lin < gamma.size(); ++lin) {
      const auto idx = gamma.unravel(lin);
      if (!interior_index(gamma, idx, {ai, aj})) continue;
      const CMatrix& wi = omega[static_cast<std::size_t>(ai)].flat(lin);
      const CMatrix& wj = omega[static_cast<std::size_t>(aj)].flat(lin);
      const CMatrix res =
          di_wj.flat(lin) - dj_wi.flat(lin) + wi * wj - wj * wi;
      if (!all_finite(res)) {
        ++skipped;
        continue;
      }
      worst = std::max(worst, max_abs(res));
    }
    rep.add(label, worst);
  };
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) pair_residual(i, j, "toda[-,-]");
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) pair_residual(i, d + j, "toda[-,+]");
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) pair_residual(d + i, d + j, "toda[+,+]");
  if (skipped) rep.meta["skipped_windows"] = std::to_string(skipped);
  return rep;
}

// Factorize a grid of group elements node by node.
struct FactorGrids {
  FieldOnGrid lower, zero, upper;
};

inline FactorGrids gauss_factor_grids(const GradedContext& ctx,
                                      const FieldOnGrid& psi) {
  FactorGrids f{FieldOnGrid(psi.axes(), psi.rows(), psi.cols()),
                FieldOnGrid(psi.axes(), psi.rows(), psi.cols()),
                FieldOnGrid(psi.axes(), psi.rows(), psi.cols())};
  for (std::size_t lin = 0; lin < psi.size(); ++lin) {
    try {
      const GaussFactors g = gauss_decompose(ctx, psi.flat(lin));
      f.lower.flat(lin) = g.lower;
      f.zero.flat(lin) = g.zero;
      f.upper.flat(lin) = g.upper;
    } catch (const NotDecomposableError& e) {
      throw NotDecomposableError(e.block(), e.what(), psi.coords_of(lin));
    }
  }
  return f;
}

// Mixed-derivative (conservation) residuals of the chiral currents of a
// group-valued grid psi, plus the flatness of each chiral current family.
inline ResidualReport wznw_residual(const FieldOnGrid& psi, int d) {
  if (psi.dim() != 2 * d)
    throw ShapeError("wznw_residual: psi grid must have 2d axes");
  std::vector<FieldOnGrid> iota_minus, iota_plus;
  for (int i = 0; i < d; ++i) {
    const FieldOnGrid dpsi = partial_derivative(psi, i);
    FieldOnGrid w(psi.axes(), psi.rows(), psi.cols());
    for (std::size_t lin = 0; lin < psi.size(); ++lin)
      w.flat(lin) = detail::soft_inverse(psi.flat(lin)) * dpsi.flat(lin);
    iota_minus.push_back(std::move(w));
  }
  for (int i = 0; i < d; ++i) {
    const FieldOnGrid dpsi = partial_derivative(psi, d + i);
    FieldOnGrid w(psi.axes(), psi.rows(), psi.cols());
    for (std::size_t lin = 0; lin < psi.size(); ++lin)
      w.flat(lin) = dpsi.flat(lin) * detail::soft_inverse(psi.flat(lin));
    iota_plus.push_back(std::move(w));
  }

  ResidualReport rep;
  double anti = 0.0, chiral_conj = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const FieldOnGrid dm = partial_derivative(iota_minus[static_cast<std::size_t>(i)], d + j);
      const FieldOnGrid dp = partial_derivative(iota_plus[static_cast<std::size_t>(j)], i);
      for (std::size_t lin = 0; lin < psi.size(); ++lin) {
        const auto idx = psi.unravel(lin);
        if (interior_index(psi, idx, {d + j}) && all_finite(dm.flat(lin)))
          anti = std::max(anti, max_abs(dm.flat(lin)));
        if (interior_index(psi, idx, {i}) && all_finite(dp.flat(lin)))
          chiral_conj = std::max(chiral_conj, max_abs(dp.flat(lin)));
      }
    }
  }
  rep.add("wznw[-]", anti);
  rep.add("wznw[+]", chiral_conj);

  if (d >= 2) {
    double cm = 0.0, cp = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) {
        const FieldOnGrid a =
            partial_derivative(iota_minus[static_cast<std::size_t>(j)], i);
        const FieldOnGrid b =
            partial_derivative(iota_minus[static_cast<std::size_t>(i)], j);
        const FieldOnGrid ap =
            partial_derivative(iota_plus[static_cast<std::size_t>(j)], d + i);
        const FieldOnGrid bp =
            partial_derivative(iota_plus[static_cast<std::size_t>(i)], d + j);
        for (std::size_t lin = 0; lin < psi.size(); ++lin) {
          const auto idx = psi.unravel(lin);
          if (interior_index(psi, idx, {i, j})) {
            const CMatrix& wi = iota_minus[static_cast<std::size_t>(i)].flat(lin);
            const CMatrix& wj = iota_minus[static_cast<std::size_t>(j)].flat(lin);
            const CMatrix res = a.flat(lin) - b.flat(lin) + wi * wj - wj * wi;
            if (all_finite(res)) cm = std::max(cm, max_abs(res));
          }
          if (interior_index(psi, idx, {d + i, d + j})) {
            const CMatrix& wi = iota_plus[static_cast<std::size_t>(i)].flat(lin);
            const CMatrix& wj = iota_plus[static_cast<std::size_t>(j)].flat(lin);
            const CMatrix res = ap.flat(lin) - bp.flat(lin) - (wi * wj - wj * wi);
            if (all_finite(res)) cp = std::max(cp, max_abs(res));
          }
        }
      }
    rep.add("curvature[-]", cm);
    rep.add("curvature[+]", cp);
  }
  return rep;
}

// Constrained-current residuals of psi: projections of the chiral currents
// against the constraint data, in both the plain and the reduced
// (triangular-factor) form.
inline ResidualReport wznw_constraint_residual(
    const GradedContext& ctx, const FieldOnGrid& psi, int d,
    const std::vector<MatrixField>& c_minus,
    const std::vector<MatrixField>& c_plus) {
  if (psi.dim() != 2 * d)
    throw ShapeError("wznw_constraint_residual: psi grid must have 2d axes");
  const FactorGrids f = gauss_factor_grids(ctx, psi);
  ResidualReport rep;
  double plain_m = 0, plain_p = 0, red_m = 0, red_p = 0;
  for (int i = 0; i < d; ++i) {
    const FieldOnGrid dpsi = partial_derivative(psi, i);
    const FieldOnGrid dlow = partial_derivative(f.lower, i);
    for (std::size_t lin = 0; lin < psi.size(); ++lin) {
      const auto idx = psi.unravel(lin);
      if (!interior_index(psi, idx, {i})) continue;
      const Coords z = psi.coords_of(lin);
      const CMatrix cur =
          detail::soft_inverse(psi.flat(lin)) * dpsi.flat(lin);
      const CMatrix r1 =
          ctx.project(cur, GradePart::negative) - c_minus[static_cast<std::size_t>(i)](z);
      if (all_finite(r1)) plain_m = std::max(plain_m, max_abs(r1));
      const CMatrix z0 = f.zero.flat(lin);
      const CMatrix red = z0.inverse() *
                          (f.lower.flat(lin).inverse() * dlow.flat(lin)) * z0 -
                          c_minus[static_cast<std::size_t>(i)](z);
      if (all_finite(red)) red_m = std::max(red_m, max_abs(red));
    }
  }
  for (int i = 0; i < d; ++i) {
    const FieldOnGrid dpsi = partial_derivative(psi, d + i);
    const FieldOnGrid dup = partial_derivative(f.upper, d + i);
    for (std::size_t lin = 0; lin < psi.size(); ++lin) {
      const auto idx = psi.unravel(lin);
      if (!interior_index(psi, idx, {d + i})) continue;
      const Coords z = psi.coords_of(lin);
      const CMatrix cur =
          dpsi.flat(lin) * detail::soft_inverse(psi.flat(lin));
      const CMatrix r1 =
          ctx.project(cur, GradePart::positive) + c_plus[static_cast<std::size_t>(i)](z);
      if (all_finite(r1)) plain_p = std::max(plain_p, max_abs(r1));
      const CMatrix z0 = f.zero.flat(lin);
      const CMatrix red = z0 *
                          (dup.flat(lin) * f.upper.flat(lin).inverse()) *
                          z0.inverse() +
                          c_plus[static_cast<std::size_t>(i)](z);
      if (all_finite(red)) red_p = std::max(red_p, max_abs(red));
    }
  }
  rep.add("constraint[-]", plain_m);
  rep.add("constraint[+]", plain_p);
  rep.add("reduced[-]", red_m);
  rep.add("reduced[+]", red_p);
  return rep;
}

// Assemble the group-valued field from a constructed solution.
inline FieldOnGrid reconstruct_wznw(const TodaData& data,
                                    const TodaSolution& sol) {
  data.check_shapes();
  const int n = data.ctx.dim();
  FieldOnGrid psi(sol.gamma.axes(), n, n);
  for (std::size_t lin = 0; lin < psi.size(); ++lin) {
    const auto idx = psi.unravel(lin);
    const std::vector<int> midx(idx.begin(), idx.begin() + data.d);
    const std::vector<int> pidx(idx.begin() + data.d, idx.end());
    const Coords z = psi.coords_of(lin);
    psi.flat(lin) = data.xi_minus(z).inverse() * data.gamma_plus(z).inverse() *
                    sol.mu_plus.at(pidx).inverse() * sol.mu_minus.at(midx) *
                    data.gamma_minus(z) * data.xi_plus(z);
  }
  return psi;
}

// ---- integrable coefficient families (Redheffer-Reid form) ------------------

// lambda_{-i} and lambda_{+i} built from the chiral data; each family is
// chiral and flat, and its graded Riccati equations are solvable in closed
// form for the two-block case (see riccati_md_solutions).
inline std::pair<std::vector<MatrixField>, std::vector<MatrixField>>
redheffer_reid_fields(const TodaData& data) {
  data.check_shapes();
  const MatrixField xp_inv = inverse_field(data.xi_plus);
  const MatrixField xm_inv = inverse_field(data.xi_minus);
  const MatrixField gm_inv = inverse_field(data.gamma_minus);
  const MatrixField gp_inv = inverse_field(data.gamma_plus);
  std::vector<MatrixField> lam_minus, lam_plus;
  for (int i = 0; i < data.d; ++i) {
    const MatrixField core =
        data.c_minus[static_cast<std::size_t>(i)] +
        gm_inv * data.gamma_minus.partial(i);
    lam_minus.push_back(xp_inv * core * data.xi_plus +
                        xp_inv * data.xi_plus.partial(i));
  }
  for (int i = 0; i < data.d; ++i) {
    const MatrixField core =
        data.c_plus[static_cast<std::size_t>(i)] +
        gp_inv * data.gamma_plus.partial(data.d + i);
    lam_plus.push_back(xm_inv * core * data.xi_minus +
                       xm_inv * data.xi_minus.partial(data.d + i));
  }
  return {std::move(lam_minus), std::move(lam_plus)};
}

// Closed-form solutions of the two-block Riccati equations attached to the
// families above: the upper equation along z^- with parameter m_minus, the
// lower equation along z^+ with parameter m_plus.  Values are the full unit
// block-triangular solutions on the chiral sub-grids of `sol`.
inline std::pair<FieldOnGrid, FieldOnGrid> riccati_md_solutions(
    const TodaData& data, const TodaSolution& sol, const CMatrix& m_minus,
    const CMatrix& m_plus) {
  data.check_shapes();
  const auto& ctx = data.ctx;
  if (ctx.blocks() != 2)
    throw ShapeError("riccati_md_solutions: two-block contexts only");
  const int n1 = ctx.block_size(0);
  const int n2 = ctx.block_size(1);
  if (m_minus.rows() != n1 || m_minus.cols() != n2)
    throw ShapeError("riccati_md_solutions: m_minus must be n1 x n2");
  if (m_plus.rows() != n2 || m_plus.cols() != n1)
    throw ShapeError("riccati_md_solutions: m_plus must be n2 x n1");

  Coords origin;
  for (const auto& ax : sol.gamma.axes()) origin.push_back(ax.front());

  FieldOnGrid upper(sol.mu_minus.axes(), ctx.dim(), ctx.dim());
  for (std::size_t lin = 0; lin < sol.mu_minus.size(); ++lin) {
    const auto idx = sol.mu_minus.unravel(lin);
    Coords z = origin;
    for (int i = 0; i < data.d; ++i)
      z[static_cast<std::size_t>(i)] =
          sol.mu_minus.axes()[static_cast<std::size_t>(i)]
                            [static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    const CMatrix gm = data.gamma_minus(z);
    const CMatrix b1 = ctx.block(gm, 0, 0);
    const CMatrix b2 = ctx.block(gm, 1, 1);
    const CMatrix mu21 = ctx.block(sol.mu_minus.flat(lin), 1, 0);
    const CMatrix den = cidentity(n1) - m_minus * mu21;
    const auto [smax, smin] = singular_range(den);
    if (!(smax > 0.0) || smin <= 1e-12 * std::max(1.0, smax))
      throw BlowupError(
          "riccati_md_solutions: upper resolvent singular at " +
              coords_to_string(z),
          z);
    const CMatrix u = ctx.block(data.xi_plus(z), 0, 1) -
                      b1.inverse() * den.inverse() * m_minus * b2;
    CMatrix y = cidentity(ctx.dim());
    ctx.set_block(y, 0, 1, u);
    upper.flat(lin) = y;
  }

  FieldOnGrid lower(sol.mu_plus.axes(), ctx.dim(), ctx.dim());
  for (std::size_t lin = 0; lin < sol.mu_plus.size(); ++lin) {
    const auto idx = sol.mu_plus.unravel(lin);
    Coords z = origin;
    for (int i = 0; i < data.d; ++i)
      z[static_cast<std::size_t>(data.d + i)] =
          sol.mu_plus.axes()[static_cast<std::size_t>(i)]
                           [static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    const CMatrix gp = data.gamma_plus(z);
    const CMatrix b1 = ctx.block(gp, 0, 0);
    const CMatrix b2 = ctx.block(gp, 1, 1);
    const CMatrix mu12 = ctx.block(sol.mu_plus.flat(lin), 0, 1);
    const CMatrix den = cidentity(n1) - mu12 * m_plus;
    const auto [smax, smin] = singular_range(den);
    if (!(smax > 0.0) || smin <= 1e-12 * std::max(1.0, smax))
      throw BlowupError(
          "riccati_md_solutions: lower resolvent singular at " +
              coords_to_string(z),
          z);
    const CMatrix u = -ctx.block(data.xi_minus(z), 1, 0) +
                      b2.inverse() * m_plus * den.inverse() * b1;
    CMatrix y = cidentity(ctx.dim());
    ctx.set_block(y, 1, 0, u);
    lower.flat(lin) = y;
  }
  return {std::move(upper), std::move(lower)};
}

// ---- the maximally nonabelian family ----------------------------------------

// Blocks (d, 1).  The data are scalar chiral fields F_-, F_+ and potentials
// H_{-i}(z^-), H_{+i}(z^+); the block-diagonal factors are built from the
// Jacobians of the potentials:
//   (beta_{-1}^{-1})_{ij} = F_- d_{-i} H_{-j},  beta_{-2}^{-1} = F_-,
//   (beta_{+1})_{ij}      = F_+ d_{+j} H_{+i},  beta_{+2}      = F_+,
// and the currents have constant unit injections on the coordinate rows and
// columns.  The mu flows then integrate to (mu_-)_{21} = H_- - H_-(origin)
// and (mu_+)_{12} = H_+ - H_+(origin).
inline TodaData maximally_nonabelian_data(
    int d, const MatrixField& f_minus, const MatrixField& f_plus,
    const std::vector<MatrixField>& h_minus,
    const std::vector<MatrixField>& h_plus,
    std::optional<MatrixField> xi_minus = std::nullopt,
    std::optional<MatrixField> xi_plus = std::nullopt) {
  if (d < 1) throw ShapeError("maximally_nonabelian_data: d >= 1");
  const int dc = 2 * d;
  auto scalar_ok = [&](const MatrixField& f) {
    return f.valid() && f.dim_in() == dc && f.rows() == 1 && f.cols() == 1;
  };
  if (!scalar_ok(f_minus) || !scalar_ok(f_plus))
    throw ShapeError("maximally_nonabelian_data: F factors must be 1x1 fields");
  if (static_cast<int>(h_minus.size()) != d ||
      static_cast<int>(h_plus.size()) != d)
    throw ShapeError("maximally_nonabelian_data: need d potentials per side");
  for (const auto& h : h_minus)
    if (!scalar_ok(h))
      throw ShapeError("maximally_nonabelian_data: potentials must be 1x1");
  for (const auto& h : h_plus)
    if (!scalar_ok(h))
      throw ShapeError("maximally_nonabelian_data: potentials must be 1x1");

  GradedContext ctx({d, 1});
  const int n = d + 1;

  // Jacobian fields.
  std::vector<std::vector<MatrixField>> jm(static_cast<std::size_t>(d)),
      jp(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      jm[static_cast<std::size_t>(i)].push_back(
          h_minus[static_cast<std::size_t>(j)].partial(i));
      jp[static_cast<std::size_t>(i)].push_back(
          h_plus[static_cast<std::size_t>(i)].partial(d + j));
    }
  const MatrixField jac_minus = block_field(jm);  // (i,j) = d_{-i} H_{-j}
  const MatrixField jac_plus = block_field(jp);   // (i,j) = d_{+j} H_{+i}

  const MatrixField beta_m1 =
      inverse_field(scalar_times(f_minus, jac_minus));
  const MatrixField beta_m2 = inverse_field(f_minus);
  const MatrixField beta_p1 = scalar_times(f_plus, jac_plus);
  const MatrixField& beta_p2 = f_plus;

  const MatrixField z_dx1 = zero_field(dc, d, 1);
  const MatrixField z_1xd = zero_field(dc, 1, d);
  TodaData data{ctx,
                d,
                block_field({{beta_m1, z_dx1}, {z_1xd, beta_m2}}),
                block_field({{beta_p1, z_dx1}, {z_1xd, beta_p2}}),
                {},
                {},
                xi_minus ? *xi_minus : identity_field(dc, n),
                xi_plus ? *xi_plus : identity_field(dc, n)};
  for (int i = 0; i < d; ++i) {
    CMatrix cm = CMatrix::Zero(n, n);
    cm(d, i) = 1.0;  // unit row injection
    data.c_minus.push_back(constant_field(dc, cm));
    CMatrix cp = CMatrix::Zero(n, n);
    cp(i, d) = 1.0;  // unit column injection
    data.c_plus.push_back(constant_field(dc, cp));
  }
  return data;
}

}  // namespace griccati
