#pragma once

// Linear matrix flows.  One variable:
//   right side:  dpsi/dx = psi * lambda(x)
//   left  side:  dpsi/dx = lambda(x) * psi
// stepped by classic RK4 or by a midpoint exponential step
// psi -> psi * exp(h * lambda(x + h/2)) (order two, stays in the group when
// lambda stays in the algebra).  Several variables: a commuting family
// lambda_i is integrated along a staircase path axis by axis; a zero-curvature
// residual quantifies how compatible the family is.

#include "griccati/field.hpp"
#include "griccati/grid.hpp"
#include "griccati/matrix_ops.hpp"

namespace griccati {

enum class FlowSide { left, right };
enum class StepMethod { rk4, magnus_midpoint };

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

struct Trajectory {
  std::vector<double> nodes;
  std::vector<CMatrix> values;
  FlowSide side = FlowSide::right;

  std::size_t size() const noexcept { return nodes.size(); }
  const CMatrix& front() const { return values.front(); }
  const CMatrix& back() const { return values.back(); }
  double step() const {
    if (nodes.size() < 2) throw ShapeError("Trajectory: no step defined");
    return nodes[1] - nodes[0];
  }
};

namespace detail {

// One RK4 step for y' = F(x, y).
template <typename Rhs>
CMatrix rk4_step(const Rhs& f, double x, const CMatrix& y, double h) {
  const CMatrix k1 = f(x, y);
  const CMatrix k2 = f(x + h / 2, (y + (h / 2) * k1).eval());
  const CMatrix k3 = f(x + h / 2, (y + (h / 2) * k2).eval());
  const CMatrix k4 = f(x + h, (y + h * k3).eval());
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline CMatrix linear_rhs(const MatrixField& lam, FlowSide side, double x,
                          const CMatrix& y) {
  const CMatrix l = lam({x});
  return side == FlowSide::right ? (y * l).eval() : (l * y).eval();
}

inline void check_finite_or_diverge(const CMatrix& y, double x,
                                    const char* what) {
  if (!all_finite(y))
    throw DivergenceError(std::string(what) + ": non-finite value at x=" +
                              std::to_string(x),
                          {x});
}

}  // namespace detail

// Integrate the one-variable linear flow over `iv` with `steps` uniform steps.
inline Trajectory solve_linear_1d(const MatrixField& lam, const CMatrix& psi0,
                                  Interval iv, int steps, FlowSide side,
                                  StepMethod method = StepMethod::rk4) {
  if (lam.dim_in() != 1) throw ShapeError("solve_linear_1d: field arity != 1");
  if (lam.rows() != lam.cols())
    throw ShapeError("solve_linear_1d: coefficient must be square");
  if (steps < 1) throw ShapeError("solve_linear_1d: steps must be positive");
  if (!(iv.hi > iv.lo)) throw ShapeError("solve_linear_1d: empty interval");
  const bool right = side == FlowSide::right;
  if ((right ? psi0.cols() : psi0.rows()) != lam.rows())
    throw ShapeError("solve_linear_1d: initial value shape mismatch");

  Trajectory t;
  t.side = side;
  t.nodes.reserve(static_cast<std::size_t>(steps) + 1);
  t.values.reserve(static_cast<std::size_t>(steps) + 1);
  const double h = (iv.hi - iv.lo) / steps;
  CMatrix y = psi0;
  t.nodes.push_back(iv.lo);
  t.values.push_back(y);
  for (int k = 0; k < steps; ++k) {
    const double x = iv.lo + k * h;
    if (method == StepMethod::rk4) {
      y = detail::rk4_step(
          [&](double xx, const CMatrix& yy) {
            return detail::linear_rhs(lam, side, xx, yy);
          },
          x, y, h);
    } else {
      const CMatrix e = matexp((h * lam({x + h / 2})).eval());
      y = right ? (y * e).eval() : (e * y).eval();
    }
    detail::check_finite_or_diverge(y, x + h, "solve_linear_1d");
    t.nodes.push_back(k + 1 == steps ? iv.hi : iv.lo + (k + 1) * h);
    t.values.push_back(y);
  }
  return t;
}

// Path-ordered exponential of the right flow started from the identity.
inline CMatrix path_ordered_exp(const MatrixField& lam, Interval iv, int steps,
                                StepMethod method = StepMethod::rk4) {
  return solve_linear_1d(lam, cidentity(lam.rows()), iv, steps,
                         FlowSide::right, method)
      .back();
}

// Dense-output view of a trajectory: exact at the stored nodes, one local RK4
// substep elsewhere; the derivative field is the flow's right-hand side.
inline MatrixField trajectory_field(const Trajectory& t,
                                    const MatrixField& lam) {
  if (t.nodes.size() < 2) throw ShapeError("trajectory_field: too few nodes");
  const double lo = t.nodes.front();
  const double h = t.step();
  const auto n = t.nodes.size();
  auto shared = std::make_shared<Trajectory>(t);
  const FlowSide side = t.side;
  auto eval = [shared, lam, lo, h, n, side](const Coords& c) {
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
          return detail::linear_rhs(lam, side, xx, yy);
        },
        xk, yk, x - xk);
  };
  const int r = static_cast<int>(t.values.front().rows());
  const int c = static_cast<int>(t.values.front().cols());
  MatrixField base(1, r, c, eval);
  return MatrixField(
      1, r, c, eval,
      [base, lam, side](int) {
        return MatrixField(1, base.rows(), base.cols(),
                           [base, lam, side](const Coords& x) {
                             return detail::linear_rhs(lam, side, x[0],
                                                       base(x));
                           });
      },
      false);
}

// Zero-curvature residual of a coefficient family over sampled axes:
//   d_i lambda_j - d_j lambda_i + [lambda_i, lambda_j]
// evaluated at every node; symbolic derivatives when the fields carry them,
// otherwise central differences with the axis spacing.
inline ResidualReport zero_curvature_residual(
    const std::vector<MatrixField>& lams, const Axes& axes) {
  const int d = static_cast<int>(lams.size());
  if (d == 0) throw ShapeError("zero_curvature_residual: no fields");
  for (const auto& f : lams)
    if (f.dim_in() != static_cast<int>(axes.size()))
      throw ShapeError("zero_curvature_residual: axis arity mismatch");
  ResidualReport rep;
  if (d == 1) {
    rep.add("curvature", 0.0);
    return rep;
  }
  std::vector<double> steps;
  steps.reserve(axes.size());
  for (const auto& ax : axes)
    steps.push_back(ax.size() >= 2 ? axis_step(ax) : 1e-6);

  FieldOnGrid probe(axes, 1, 1);  // index bookkeeping only
  bool analytic = true;
  for (const auto& f : lams) analytic = analytic && f.analytic();
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      double worst = 0.0;
      for (std::size_t lin = 0; lin < probe.size(); ++lin) {
        const Coords x = probe.coords_of(lin);
        const CMatrix dij = lams[static_cast<std::size_t>(j)].partial_at(
            x, i, steps[static_cast<std::size_t>(i)]);
        const CMatrix dji = lams[static_cast<std::size_t>(i)].partial_at(
            x, j, steps[static_cast<std::size_t>(j)]);
        const CMatrix li = lams[static_cast<std::size_t>(i)](x);
        const CMatrix lj = lams[static_cast<std::size_t>(j)](x);
        worst = std::max(worst, max_abs(dij - dji + li * lj - lj * li));
      }
      rep.add("curvature[" + std::to_string(i) + "," + std::to_string(j) + "]",
              worst);
    }
  rep.meta["derivatives"] = analytic ? "symbolic" : "finite-difference";
  return rep;
}

// Integrate a commuting family along staircase paths (axes in `axis_order`),
// filling the whole grid.  `substeps` integration steps are taken between
// consecutive grid nodes.  When `curvature_gate` >= 0 the curvature residual
// is evaluated first; exceeding the gate is recorded in the result metadata.
inline FieldOnGrid solve_linear_md(const std::vector<MatrixField>& lams,
                                   const CMatrix& psi0, const Axes& axes,
                                   const std::vector<int>& axis_order,
                                   FlowSide side,
                                   StepMethod method = StepMethod::rk4,
                                   int substeps = 1,
                                   double curvature_gate = -1.0) {
  const auto d = axes.size();
  if (lams.size() != d)
    throw ShapeError("solve_linear_md: one coefficient field per axis");
  if (axis_order.size() != d)
    throw ShapeError("solve_linear_md: axis_order must list every axis");
  if (substeps < 1) throw ShapeError("solve_linear_md: substeps >= 1");
  std::vector<bool> seen(d, false);
  for (int a : axis_order) {
    if (a < 0 || a >= static_cast<int>(d) || seen[static_cast<std::size_t>(a)])
      throw ShapeError("solve_linear_md: axis_order must be a permutation");
    seen[static_cast<std::size_t>(a)] = true;
  }
  const int n = static_cast<int>(psi0.rows());
  if (psi0.cols() != n) throw ShapeError("solve_linear_md: square initial value");

  FieldOnGrid g(axes, n, n);
  if (curvature_gate >= 0.0) {
    const auto rep = zero_curvature_residual(lams, axes);
    if (rep.max_residual() > curvature_gate) {
      std::ostringstream os;
      os << rep.max_residual();
      g.meta["curvature_warning"] = os.str();
    }
  }

  std::vector<int> origin(d, 0);
  g.at(origin) = psi0;

  // After processing k axes of axis_order, the subgrid spanned by those axes
  // (others at node 0) is filled; each new axis extends every filled node.
  std::vector<int> processed;
  for (int a : axis_order) {
    const auto& ax = axes[static_cast<std::size_t>(a)];
    // Enumerate filled base nodes: indices varying over `processed`, zero
    // elsewhere, with index 0 along axis `a`.
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
      // Integrate along axis `a` from this base node.
      CMatrix y = g.at(idx);
      Coords base = g.coords_at(idx);
      const MatrixField line =
          restrict_field(lams[static_cast<std::size_t>(a)], base, {a});
      for (std::size_t k = 0; k + 1 < ax.size(); ++k) {
        const double x0 = ax[k];
        const double x1 = ax[k + 1];
        const double h = (x1 - x0) / substeps;
        for (int s = 0; s < substeps; ++s) {
          const double xs = x0 + s * h;
          if (method == StepMethod::rk4) {
            y = detail::rk4_step(
                [&](double xx, const CMatrix& yy) {
                  return detail::linear_rhs(line, side, xx, yy);
                },
                xs, y, h);
          } else {
            const CMatrix e = matexp((h * line({xs + h / 2})).eval());
            y = side == FlowSide::right ? (y * e).eval() : (e * y).eval();
          }
        }
        Coords where = base;
        where[static_cast<std::size_t>(a)] = x1;
        if (!all_finite(y))
          throw DivergenceError("solve_linear_md: non-finite value at " +
                                    coords_to_string(where),
                                where);
        idx[static_cast<std::size_t>(a)] = static_cast<int>(k + 1);
        g.at(idx) = y;
      }
      idx[static_cast<std::size_t>(a)] = 0;
    }
    processed.push_back(a);
  }
  return g;
}

}  // namespace griccati
