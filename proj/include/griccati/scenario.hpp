#pragma once

// Declarative scenario runner shared by the command-line front end and the
// test suite.  A scenario is a JSON document with a "kind" selector and a
// numeric "gate"; running it produces a residual report whose entries are
// self-checks (reconstruction errors, cross-method and cross-resolution
// distances, equation defects).  Every residual must stay below the gate for
// the run to pass.  With an output directory set, the runner also writes the
// computed objects as CSV/JSON files plus a summary.json; reruns produce
// byte-identical bytes.

#include "griccati/closed.hpp"
#include "griccati/flow.hpp"
#include "griccati/gauss.hpp"
#include "griccati/io.hpp"
#include "griccati/riccati.hpp"
#include "griccati/toda.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace griccati {

struct RunOptions {
  std::string out_dir;        // empty: compute only, write nothing
  int steps_override = -1;    // overrides "steps" when positive
  int grid_override = -1;     // overrides every axis node count when positive
  double gate_override = -1;  // overrides "gate" when positive
};

struct RunResult {
  std::string name;
  std::string kind;
  double gate = 0.0;
  ResidualReport residuals;
  std::vector<std::string> failures;  // labels at or above the gate
  std::vector<std::string> outputs;   // files written (relative to out_dir)
  ordered_json summary;

  bool pass() const { return failures.empty(); }
};

namespace scenario_detail {

inline const ordered_json& jref(const ordered_json& j, const std::string& key) {
  if (!j.is_object() || !j.contains(key))
    throw ShapeError("scenario: missing field '" + key + "'");
  return j.at(key);
}

inline double require_number(const ordered_json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_number())
    throw ShapeError("scenario: missing numeric field '" + key + "'");
  return j[key].get<double>();
}

inline int require_int(const ordered_json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_number_integer())
    throw ShapeError("scenario: missing integer field '" + key + "'");
  return j[key].get<int>();
}

inline int int_or(const ordered_json& j, const std::string& key, int dflt) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_number_integer())
    throw ShapeError("scenario: field '" + key + "' must be an integer");
  return j[key].get<int>();
}

inline double num_or(const ordered_json& j, const std::string& key,
                     double dflt) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_number())
    throw ShapeError("scenario: field '" + key + "' must be a number");
  return j[key].get<double>();
}

inline std::string str_or(const ordered_json& j, const std::string& key,
                          const std::string& dflt) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_string())
    throw ShapeError("scenario: field '" + key + "' must be a string");
  return j[key].get<std::string>();
}

inline GradedContext ctx_from_json(const ordered_json& j) {
  if (!j.contains("block_sizes") || !j["block_sizes"].is_array())
    throw ShapeError("scenario: missing 'block_sizes'");
  std::vector<int> sizes;
  for (const auto& v : j["block_sizes"]) {
    if (!v.is_number_integer())
      throw ShapeError("scenario: block sizes must be integers");
    sizes.push_back(v.get<int>());
  }
  return GradedContext(sizes);
}

// Axis spec: {"lo": a, "hi": b, "count": n} or [a, b, n].
inline std::vector<double> axis_from_json(const ordered_json& j,
                                          int count_override) {
  double lo = 0, hi = 0;
  int count = 0;
  if (j.is_object()) {
    lo = require_number(j, "lo");
    hi = require_number(j, "hi");
    count = require_int(j, "count");
  } else if (j.is_array() && j.size() == 3) {
    lo = j[0].get<double>();
    hi = j[1].get<double>();
    count = j[2].get<int>();
  } else {
    throw ShapeError("scenario: axis must be {lo,hi,count} or [lo,hi,count]");
  }
  if (count_override > 0) count = count_override;
  return linspace(lo, hi, count);
}

inline Axes axes_from_json(const ordered_json& j, const std::string& key,
                           int count_override) {
  if (!j.contains(key) || !j[key].is_array() || j[key].empty())
    throw ShapeError("scenario: missing axes list '" + key + "'");
  Axes axes;
  for (const auto& a : j[key]) axes.push_back(axis_from_json(a, count_override));
  return axes;
}

// Deterministic pseudo-random matrix (mt19937 raw draws, fixed mapping).
inline CMatrix random_matrix(int rows, int cols, unsigned seed, double scale,
                             bool complex_entries) {
  std::mt19937 eng(seed);
  auto draw = [&]() {
    return (static_cast<double>(eng()) / 4294967296.0) * 2.0 - 1.0;
  };
  CMatrix a(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double re = draw() * scale;
      const double im = complex_entries ? draw() * scale : 0.0;
      a(r, c) = Complex(re, im);
    }
  return a;
}

inline CMatrix matrix_spec(const ordered_json& j, int rows = -1,
                           int cols = -1) {
  CMatrix a;
  if (j.is_object() && j.contains("random")) {
    const auto& r = j["random"];
    const int rr = int_or(r, "rows", rows);
    const int cc = int_or(r, "cols", cols);
    if (rr <= 0 || cc <= 0)
      throw ShapeError("scenario: random matrix needs rows/cols");
    a = random_matrix(rr, cc, static_cast<unsigned>(require_int(r, "seed")),
                      num_or(r, "scale", 1.0),
                      r.contains("complex") ? r["complex"].get<bool>() : true);
  } else {
    a = matrix_from_json(j);
  }
  if ((rows > 0 && a.rows() != rows) || (cols > 0 && a.cols() != cols))
    throw ShapeError("scenario: matrix has the wrong shape");
  return a;
}

// Field spec: constant | zero | identity | polynomial.
inline MatrixField field_from_json(const ordered_json& j, int expected_dim) {
  if (!j.is_object() || !j.contains("kind"))
    throw ShapeError("scenario: field spec needs a 'kind'");
  const std::string kind = j["kind"].get<std::string>();
  const int dim = int_or(j, "dim", expected_dim);
  if (dim <= 0) throw ShapeError("scenario: field spec needs 'dim'");
  if (expected_dim > 0 && dim != expected_dim)
    throw ShapeError("scenario: field spec arity mismatch");
  if (kind == "constant") {
    if (!j.contains("value")) throw ShapeError("scenario: constant field needs 'value'");
    return constant_field(dim, matrix_spec(j["value"]));
  }
  if (kind == "zero")
    return zero_field(dim, require_int(j, "rows"), require_int(j, "cols"));
  if (kind == "identity") return identity_field(dim, require_int(j, "n"));
  if (kind == "polynomial") {
    if (!j.contains("terms") || !j["terms"].is_array() || j["terms"].empty())
      throw ShapeError("scenario: polynomial field needs 'terms'");
    std::vector<Monomial> terms;
    for (const auto& t : j["terms"]) {
      Monomial mono;
      if (!t.contains("exps") || !t["exps"].is_array())
        throw ShapeError("scenario: polynomial term needs 'exps'");
      for (const auto& e : t["exps"]) mono.exps.push_back(e.get<int>());
      if (!t.contains("coeff"))
        throw ShapeError("scenario: polynomial term needs 'coeff'");
      mono.coeff = matrix_from_json(t["coeff"]);
      terms.push_back(std::move(mono));
    }
    return polynomial_field(dim, std::move(terms));
  }
  throw ShapeError("scenario: unknown field kind '" + kind + "'");
}

inline std::vector<MatrixField> field_list(const ordered_json& j,
                                           const std::string& key,
                                           int expected_dim) {
  if (!j.contains(key) || !j[key].is_array() || j[key].empty())
    throw ShapeError("scenario: missing field list '" + key + "'");
  std::vector<MatrixField> out;
  for (const auto& f : j[key]) out.push_back(field_from_json(f, expected_dim));
  return out;
}

inline FieldOnGrid grid_from_trajectory(const Trajectory& t) {
  if (t.values.empty()) throw ShapeError("grid_from_trajectory: empty");
  FieldOnGrid g({t.nodes}, static_cast<int>(t.values.front().rows()),
                static_cast<int>(t.values.front().cols()));
  for (std::size_t k = 0; k < t.values.size(); ++k) g.flat(k) = t.values[k];
  return g;
}

inline double trajectory_distance(const Trajectory& a, const Trajectory& b) {
  if (a.values.size() != b.values.size())
    throw ShapeError("trajectory_distance: node count mismatch");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k)
    worst = std::max(worst, max_abs(a.values[k] - b.values[k]));
  return worst;
}

// Distance at the shared nodes of a trajectory and its halved-step refinement.
inline double halving_distance(const Trajectory& coarse,
                               const Trajectory& fine) {
  if (fine.values.size() != 2 * coarse.values.size() - 1)
    throw ShapeError("halving_distance: not a 2x refinement");
  double worst = 0.0;
  for (std::size_t k = 0; k < coarse.values.size(); ++k)
    worst = std::max(worst, max_abs(coarse.values[k] - fine.values[2 * k]));
  return worst;
}

inline double grid_distance(const FieldOnGrid& a, const FieldOnGrid& b) {
  if (a.size() != b.size()) throw ShapeError("grid_distance: size mismatch");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    worst = std::max(worst, max_abs(a.flat(k) - b.flat(k)));
  return worst;
}

struct OutputSink {
  std::filesystem::path dir;
  bool enabled = false;
  std::vector<std::string>* names = nullptr;

  void text(const std::string& name, const std::string& body) const {
    if (!enabled) return;
    write_text_file((dir / name).string(), body);
    names->push_back(name);
  }
  void json(const std::string& name, const ordered_json& j) const {
    text(name, j.dump(2) + "\n");
  }
  void csv_traj(const std::string& name, const Trajectory& t) const {
    if (!enabled) return;
    std::ostringstream os;
    trajectory_to_csv(os, t);
    text(name, os.str());
  }
  void csv_grid(const std::string& name, const FieldOnGrid& g) const {
    if (!enabled) return;
    std::ostringstream os;
    grid_to_csv(os, g);
    text(name, os.str());
  }
};

inline FlowSide side_from_string(const std::string& s) {
  if (s == "left") return FlowSide::left;
  if (s == "right") return FlowSide::right;
  throw ShapeError("scenario: flow side must be left|right");
}

inline StepMethod method_from_string(const std::string& s) {
  if (s == "rk4") return StepMethod::rk4;
  if (s == "magnus" || s == "magnus-midpoint") return StepMethod::magnus_midpoint;
  throw ShapeError("scenario: method must be rk4|magnus");
}

inline RiccatiSide riccati_side_from_string(const std::string& s) {
  if (s == "upper") return RiccatiSide::upper;
  if (s == "lower") return RiccatiSide::lower;
  throw ShapeError("scenario: riccati side must be upper|lower");
}

// ---- kind runners -----------------------------------------------------------

inline void run_gauss(const ordered_json& j, const RunOptions&,
                      ResidualReport& rep, const OutputSink& out) {
  const GradedContext ctx = ctx_from_json(j);
  if (!j.contains("matrix")) throw ShapeError("scenario: gauss needs 'matrix'");
  const CMatrix a = matrix_spec(j["matrix"], ctx.dim(), ctx.dim());
  const GaussFactors f = gauss_decompose(ctx, a);
  const double scale = std::max(1.0, max_abs(a));
  rep.add("reconstruct", max_abs(f.reconstruct() - a) / scale);
  rep.add("chart(lower)",
          std::max(max_abs(ctx.project(f.lower, GradePart::positive)),
                   max_abs(ctx.project(f.lower, GradePart::zero) -
                           cidentity(ctx.dim()))));
  rep.add("chart(upper)",
          std::max(max_abs(ctx.project(f.upper, GradePart::negative)),
                   max_abs(ctx.project(f.upper, GradePart::zero) -
                           cidentity(ctx.dim()))));
  rep.add("diagonal(zero)",
          max_abs(f.zero - ctx.project(f.zero, GradePart::zero)));
  ordered_json fj;
  fj["input"] = matrix_to_json(a);
  fj["lower"] = matrix_to_json(f.lower);
  fj["zero"] = matrix_to_json(f.zero);
  fj["upper"] = matrix_to_json(f.upper);
  out.json("factors.json", fj);
}

inline void run_flow(const ordered_json& j, const RunOptions& opt,
                     ResidualReport& rep, const OutputSink& out) {
  const MatrixField lam = field_from_json(jref(j, "lambda"), 1);
  const CMatrix psi0 = j.contains("psi0")
                           ? matrix_spec(jref(j, "psi0"))
                           : cidentity(lam.rows());
  if (!j.contains("interval") || !j["interval"].is_array() ||
      j["interval"].size() != 2)
    throw ShapeError("scenario: flow needs 'interval': [lo, hi]");
  const Interval iv{j["interval"][0].get<double>(),
                    j["interval"][1].get<double>()};
  int steps = int_or(j, "steps", 200);
  if (opt.steps_override > 0) steps = opt.steps_override;
  const FlowSide side = side_from_string(str_or(j, "side", "right"));
  const StepMethod method = method_from_string(str_or(j, "method", "rk4"));

  const Trajectory t = solve_linear_1d(lam, psi0, iv, steps, side, method);
  const Trajectory fine =
      solve_linear_1d(lam, psi0, iv, 2 * steps, side, method);
  const StepMethod other = method == StepMethod::rk4
                               ? StepMethod::magnus_midpoint
                               : StepMethod::rk4;
  const Trajectory cross = solve_linear_1d(lam, psi0, iv, steps, side, other);
  rep.add("halving", halving_distance(t, fine));
  rep.add("cross-method", trajectory_distance(t, cross));
  out.csv_traj("trajectory.csv", t);
  out.json("trajectory.json", trajectory_to_json(t));
}

inline RiccatiProblem riccati_problem_from_json(const ordered_json& j,
                                                int n_vars) {
  const GradedContext ctx = ctx_from_json(j);
  const RiccatiSide side =
      riccati_side_from_string(str_or(j, "side", "upper"));
  std::vector<MatrixField> lams;
  if (n_vars == 1) {
    lams.push_back(field_from_json(jref(j, "lambda"), 1));
  } else {
    lams = field_list(j, "lambdas", n_vars);
  }
  CMatrix y0;
  if (j.contains("initial")) {
    y0 = matrix_spec(j["initial"], ctx.dim(), ctx.dim());
  } else if (j.contains("m") && ctx.blocks() == 2) {
    const CMatrix m = side == RiccatiSide::upper
                          ? matrix_spec(j["m"], ctx.block_size(0), ctx.block_size(1))
                          : matrix_spec(j["m"], ctx.block_size(1), ctx.block_size(0));
    y0 = cidentity(ctx.dim());
    if (side == RiccatiSide::upper)
      ctx.set_block(y0, 0, 1, m);
    else
      ctx.set_block(y0, 1, 0, m);
  } else {
    throw ShapeError("scenario: riccati needs 'initial' or two-block 'm'");
  }
  RiccatiProblem p{ctx, std::move(lams), std::move(y0), side};
  p.validate();
  return p;
}

inline void run_riccati(const ordered_json& j, const RunOptions& opt,
                        ResidualReport& rep, const OutputSink& out) {
  RiccatiProblem p = riccati_problem_from_json(j, 1);
  if (!j.contains("interval") || j["interval"].size() != 2)
    throw ShapeError("scenario: riccati needs 'interval'");
  const Interval iv{j["interval"][0].get<double>(),
                    j["interval"][1].get<double>()};
  int steps = int_or(j, "steps", 400);
  if (opt.steps_override > 0) steps = opt.steps_override;

  const Trajectory direct = solve_direct(p, iv, steps);
  const Trajectory lin = solve_by_linearization(p, iv, steps);
  rep.add("direct-vs-linearized", trajectory_distance(direct, lin));
  const ResidualReport defect = riccati_grid_residual(
      p.ctx, grid_from_trajectory(lin), {p.lambda[0]}, p.side);
  rep.add("defect", defect.max_residual());
  if (j.contains("chi")) {
    const MatrixField chi = field_from_json(j["chi"], 1);
    const ResidualReport cov = gauge_covariance_check(p, chi, iv, steps);
    rep.add("covariance", cov.max_residual());
  }
  out.csv_traj("solution.csv", lin);
  out.json("solution.json", trajectory_to_json(lin));
}

inline void run_riccati_md(const ordered_json& j, const RunOptions& opt,
                           ResidualReport& rep, const OutputSink& out) {
  const Axes axes = axes_from_json(j, "axes", opt.grid_override);
  RiccatiProblem p =
      riccati_problem_from_json(j, static_cast<int>(axes.size()));
  const int substeps = int_or(j, "substeps", 1);

  std::vector<int> order(axes.size());
  for (std::size_t a = 0; a < axes.size(); ++a)
    order[a] = static_cast<int>(a);
  std::vector<int> reversed(order.rbegin(), order.rend());

  const FieldOnGrid lin =
      solve_linearized_md(p, axes, order, StepMethod::rk4, substeps);
  const FieldOnGrid swapped =
      solve_linearized_md(p, axes, reversed, StepMethod::rk4, substeps);
  const FieldOnGrid direct = solve_direct_md(p, axes, order, substeps);
  rep.add("direct-vs-linearized", grid_distance(direct, lin));
  rep.add("order-swap", grid_distance(lin, swapped));
  const ResidualReport defect =
      riccati_grid_residual(p.ctx, lin, p.lambda, p.side);
  for (const auto& [label, value] : defect.entries) rep.add(label, value);
  if (axes.size() >= 2)
    rep.add("compatibility",
            zero_curvature_residual(p.lambda, axes).max_residual());
  out.csv_grid("solution.csv", lin);
}

inline void run_closed_form(const ordered_json& j, const RunOptions& opt,
                            ResidualReport& rep, const OutputSink& out) {
  const std::string family = str_or(j, "family", "");
  int steps = int_or(j, "steps", 200);
  if (opt.steps_override > 0) steps = opt.steps_override;

  if (family == "b-zero") {
    BZeroData dat{field_from_json(jref(j, "A"), 1), field_from_json(jref(j, "C"), 1),
                  field_from_json(jref(j, "D"), 1), matrix_spec(jref(j, "m"))};
    const double x_max = require_number(j, "x_max");
    const Trajectory closed = solve_b_zero(dat, x_max, steps);
    const int n1 = static_cast<int>(dat.m.rows());
    const int n2 = static_cast<int>(dat.m.cols());
    GradedContext ctx({n1, n2});
    const MatrixField lam = block_field(
        {{dat.A, zero_field(1, n1, n2)}, {dat.C, dat.D}});
    CMatrix y0 = cidentity(n1 + n2);
    ctx.set_block(y0, 0, 1, dat.m);
    RiccatiProblem p{ctx, {lam}, y0, RiccatiSide::upper};
    const Trajectory lin = solve_by_linearization(p, {0.0, x_max}, steps);
    const Trajectory direct = solve_direct(p, {0.0, x_max}, steps);
    double dl = 0.0, dd = 0.0;
    for (std::size_t k = 0; k < closed.values.size(); ++k) {
      dl = std::max(dl, max_abs(closed.values[k] -
                                ctx.block(lin.values[k], 0, 1)));
      dd = std::max(dd, max_abs(closed.values[k] -
                                ctx.block(direct.values[k], 0, 1)));
    }
    rep.add("closed-vs-linearized", dl);
    rep.add("closed-vs-direct", dd);
    out.csv_traj("closed.csv", closed);
    return;
  }

  if (family == "cb-equal") {
    const MatrixField B = field_from_json(jref(j, "B"), 1);
    const CMatrix m = matrix_spec(jref(j, "m"));
    const double x_max = require_number(j, "x_max");
    const Trajectory closed = solve_cb_equal(B, m, x_max, steps);
    const int n = static_cast<int>(m.rows());
    GradedContext ctx({n, n});
    const MatrixField lam =
        block_field({{zero_field(1, n, n), B}, {B, zero_field(1, n, n)}});
    CMatrix y0 = cidentity(2 * n);
    ctx.set_block(y0, 0, 1, m);
    RiccatiProblem p{ctx, {lam}, y0, RiccatiSide::upper};
    const Trajectory lin = solve_by_linearization(p, {0.0, x_max}, steps);
    const Trajectory direct = solve_direct(p, {0.0, x_max}, steps);
    double dl = 0.0, dd = 0.0;
    for (std::size_t k = 0; k < closed.values.size(); ++k) {
      dl = std::max(dl, max_abs(closed.values[k] -
                                ctx.block(lin.values[k], 0, 1)));
      dd = std::max(dd, max_abs(closed.values[k] -
                                ctx.block(direct.values[k], 0, 1)));
    }
    rep.add("closed-vs-linearized", dl);
    rep.add("closed-vs-direct", dd);
    out.csv_traj("closed.csv", closed);
    return;
  }

  if (family == "constant-bc") {
    ConstantBCData dat{matrix_spec(jref(j, "B")), matrix_spec(jref(j, "C")),
                       matrix_spec(jref(j, "m"))};
    const double x_max = require_number(j, "x_max");
    const Trajectory closed = solve_constant_bc_traj(dat, x_max, steps);
    const int n1 = static_cast<int>(dat.B.rows());
    const int n2 = static_cast<int>(dat.B.cols());
    GradedContext ctx({n1, n2});
    CMatrix lam0 = czero(n1 + n2, n1 + n2);
    ctx.set_block(lam0, 0, 1, dat.B);
    ctx.set_block(lam0, 1, 0, dat.C);
    CMatrix y0 = cidentity(n1 + n2);
    ctx.set_block(y0, 0, 1, dat.m);
    RiccatiProblem p{ctx, {constant_field(1, lam0)}, y0, RiccatiSide::upper};
    const Trajectory lin = solve_by_linearization(p, {0.0, x_max}, steps);
    const Trajectory direct = solve_direct(p, {0.0, x_max}, steps);
    double dl = 0.0, dd = 0.0;
    for (std::size_t k = 0; k < closed.values.size(); ++k) {
      dl = std::max(dl, max_abs(closed.values[k] -
                                ctx.block(lin.values[k], 0, 1)));
      dd = std::max(dd, max_abs(closed.values[k] -
                                ctx.block(direct.values[k], 0, 1)));
    }
    rep.add("closed-vs-linearized", dl);
    rep.add("closed-vs-direct", dd);
    out.csv_traj("closed.csv", closed);
    return;
  }

  if (family == "three-block-nilpotent") {
    const GradedContext ctx = ctx_from_json(j);
    if (ctx.blocks() != 3)
      throw ShapeError("scenario: three-block family needs 3 blocks");
    const int n1 = ctx.block_size(0), n2 = ctx.block_size(1),
              n3 = ctx.block_size(2);
    ThreeBlockData dat{field_from_json(jref(j, "C21"), 1),
                       field_from_json(jref(j, "C31"), 1),
                       field_from_json(jref(j, "C32"), 1),
                       matrix_spec(jref(j, "m12"), n1, n2),
                       matrix_spec(jref(j, "m13"), n1, n3),
                       matrix_spec(jref(j, "m23"), n2, n3)};
    const double x_max = require_number(j, "x_max");
    const Trajectory closed = solve_three_block_nilpotent(ctx, dat, x_max, steps);
    const MatrixField lam = block_field(
        {{zero_field(1, n1, n1), zero_field(1, n1, n2), zero_field(1, n1, n3)},
         {dat.C21, zero_field(1, n2, n2), zero_field(1, n2, n3)},
         {dat.C31, dat.C32, zero_field(1, n3, n3)}});
    CMatrix y0 = cidentity(ctx.dim());
    ctx.set_block(y0, 0, 1, dat.m12);
    ctx.set_block(y0, 0, 2, dat.m13);
    ctx.set_block(y0, 1, 2, dat.m23);
    RiccatiProblem p{ctx, {lam}, y0, RiccatiSide::upper};
    const Trajectory lin = solve_by_linearization(p, {0.0, x_max}, steps);
    const Trajectory direct = solve_direct(p, {0.0, x_max}, steps);
    rep.add("closed-vs-linearized", trajectory_distance(closed, lin));
    rep.add("closed-vs-direct", trajectory_distance(closed, direct));
    out.csv_traj("closed.csv", closed);
    return;
  }

  if (family == "md-nilpotent") {
    if (!j.contains("point") || !j["point"].is_array() || j["point"].empty())
      throw ShapeError("scenario: md-nilpotent needs 'point'");
    Coords point;
    for (const auto& v : j["point"]) point.push_back(v.get<double>());
    const int d = static_cast<int>(point.size());
    const std::vector<MatrixField> C = field_list(j, "C", d);
    const int n2 = C[0].rows();
    const int n1 = C[0].cols();
    const CMatrix m = matrix_spec(jref(j, "m"), n1, n2);
    const int spa = int_or(j, "steps_per_axis", 64);
    const CMatrix u = solve_md_nilpotent(C, m, point, spa);

    GradedContext ctx({n1, n2});
    std::vector<MatrixField> lams;
    for (const auto& c : C)
      lams.push_back(block_field(
          {{zero_field(d, n1, n1), zero_field(d, n1, n2)},
           {c, zero_field(d, n2, n2)}}));
    CMatrix y0 = cidentity(ctx.dim());
    ctx.set_block(y0, 0, 1, m);
    RiccatiProblem p{ctx, lams, y0, RiccatiSide::upper};
    Axes axes;
    int count = int_or(j, "cross_count", 33);
    if (opt.grid_override > 0) count = opt.grid_override;
    for (double x : point) axes.push_back(linspace(std::min(0.0, x), std::max(0.0, x), count));
    std::vector<int> axis_order(axes.size());
    for (std::size_t a = 0; a < axes.size(); ++a)
      axis_order[a] = static_cast<int>(a);
    const FieldOnGrid lin = solve_linearized_md(p, axes, axis_order);
    std::vector<int> corner(axes.size());
    for (std::size_t a = 0; a < axes.size(); ++a)
      corner[a] = point[a] >= 0 ? static_cast<int>(axes[a].size()) - 1 : 0;
    const CMatrix at_corner = ctx.block(lin.at(corner), 0, 1);
    rep.add("closed-vs-linearized", max_abs(u - at_corner));
    ordered_json sol;
    sol["point"] = point;
    sol["value"] = matrix_to_json(u);
    out.json("closed.json", sol);
    return;
  }

  throw ShapeError("scenario: unknown closed-form family '" + family + "'");
}

inline TodaData toda_data_from_json(const ordered_json& j) {
  if (j.contains("nonabelian")) {
    const auto& nb = j["nonabelian"];
    const int d = require_int(nb, "d");
    const int dc = 2 * d;
    std::optional<MatrixField> xm, xp;
    if (nb.contains("xi_minus")) xm = field_from_json(nb["xi_minus"], dc);
    if (nb.contains("xi_plus")) xp = field_from_json(nb["xi_plus"], dc);
    return maximally_nonabelian_data(
        d, field_from_json(jref(nb, "f_minus"), dc), field_from_json(jref(nb, "f_plus"), dc),
        field_list(nb, "h_minus", dc), field_list(nb, "h_plus", dc), xm, xp);
  }
  const GradedContext ctx = ctx_from_json(j);
  const int d = int_or(j, "d", 1);
  const int dc = 2 * d;
  TodaData data{ctx,
                d,
                field_from_json(jref(j, "gamma_minus"), dc),
                field_from_json(jref(j, "gamma_plus"), dc),
                field_list(j, "c_minus", dc),
                field_list(j, "c_plus", dc),
                j.contains("xi_minus") ? field_from_json(j["xi_minus"], dc)
                                       : identity_field(dc, ctx.dim()),
                j.contains("xi_plus") ? field_from_json(j["xi_plus"], dc)
                                      : identity_field(dc, ctx.dim())};
  data.check_shapes();
  return data;
}

inline void run_toda(const ordered_json& j, const RunOptions& opt,
                     ResidualReport& rep, const OutputSink& out,
                     bool with_wznw) {
  const TodaData data = toda_data_from_json(j);
  const Axes minus_axes = axes_from_json(j, "minus_axes", opt.grid_override);
  const Axes plus_axes = axes_from_json(j, "plus_axes", opt.grid_override);
  const int substeps = int_or(j, "substeps", 1);

  const ResidualReport valid = validate_toda_data(data, minus_axes, plus_axes);
  for (const auto& [label, value] : valid.entries) rep.add(label, value);

  const TodaSolution sol =
      construct_solution(data, minus_axes, plus_axes, substeps);
  const ResidualReport toda =
      toda_residual(data.ctx, data.d, sol.gamma, data.c_minus, data.c_plus);
  for (const auto& [label, value] : toda.entries) rep.add(label, value);

  out.csv_grid("gamma.csv", sol.gamma);
  out.csv_grid("eta.csv", sol.eta);
  out.csv_grid("mu_minus.csv", sol.mu_minus);
  out.csv_grid("mu_plus.csv", sol.mu_plus);

  if (j.contains("m_minus") && j.contains("m_plus") &&
      data.ctx.blocks() == 2) {
    const int n1 = data.ctx.block_size(0);
    const int n2 = data.ctx.block_size(1);
    const CMatrix m_minus = matrix_spec(jref(j, "m_minus"), n1, n2);
    const CMatrix m_plus = matrix_spec(jref(j, "m_plus"), n2, n1);
    const auto [lam_minus, lam_plus] = redheffer_reid_fields(data);
    const auto [u_minus, u_plus] =
        riccati_md_solutions(data, sol, m_minus, m_plus);
    Coords origin;
    for (const auto& ax : sol.gamma.axes()) origin.push_back(ax.front());
    std::vector<MatrixField> lm, lp;
    for (const auto& f : lam_minus)
      lm.push_back(restrict_field(f, origin, data.minus_axes()));
    for (const auto& f : lam_plus)
      lp.push_back(restrict_field(f, origin, data.plus_axes()));
    rep.add("riccati[-]",
            riccati_grid_residual(data.ctx, u_minus, lm, RiccatiSide::upper)
                .max_residual());
    rep.add("riccati[+]",
            riccati_grid_residual(data.ctx, u_plus, lp, RiccatiSide::lower)
                .max_residual());
    out.csv_grid("riccati_minus.csv", u_minus);
    out.csv_grid("riccati_plus.csv", u_plus);
  }

  if (with_wznw) {
    const FieldOnGrid psi = reconstruct_wznw(data, sol);
    const ResidualReport wz = wznw_residual(psi, data.d);
    for (const auto& [label, value] : wz.entries) rep.add(label, value);
    const ResidualReport cons = wznw_constraint_residual(
        data.ctx, psi, data.d, data.c_minus, data.c_plus);
    for (const auto& [label, value] : cons.entries) rep.add(label, value);
    const FactorGrids fg = gauss_factor_grids(data.ctx, psi);
    double match = 0.0;
    for (std::size_t lin = 0; lin < psi.size(); ++lin) {
      const CMatrix diff = fg.zero.flat(lin) - sol.gamma.flat(lin);
      if (all_finite(diff)) match = std::max(match, max_abs(diff));
    }
    rep.add("factor-match", match);
    out.csv_grid("psi.csv", psi);
  }
}

}  // namespace scenario_detail

inline RunResult run_scenario(const ordered_json& sc, const RunOptions& opt) {
  using namespace scenario_detail;
  if (!sc.is_object() || !sc.contains("kind") || !sc["kind"].is_string())
    throw ShapeError("scenario: document needs a string 'kind'");

  RunResult res;
  res.name = str_or(sc, "name", "unnamed");
  res.kind = sc["kind"].get<std::string>();
  res.gate = num_or(sc, "gate", 1e-8);
  if (opt.gate_override > 0) res.gate = opt.gate_override;

  OutputSink out;
  if (!opt.out_dir.empty()) {
    out.dir = opt.out_dir;
    out.enabled = true;
    out.names = &res.outputs;
    std::filesystem::create_directories(out.dir);
  }

  if (res.kind == "gauss") {
    run_gauss(sc, opt, res.residuals, out);
  } else if (res.kind == "flow") {
    run_flow(sc, opt, res.residuals, out);
  } else if (res.kind == "riccati") {
    run_riccati(sc, opt, res.residuals, out);
  } else if (res.kind == "riccati-md") {
    run_riccati_md(sc, opt, res.residuals, out);
  } else if (res.kind == "closed-form") {
    run_closed_form(sc, opt, res.residuals, out);
  } else if (res.kind == "toda") {
    run_toda(sc, opt, res.residuals, out, false);
  } else if (res.kind == "wznw-check") {
    run_toda(sc, opt, res.residuals, out, true);
  } else {
    throw ShapeError("scenario: unknown kind '" + res.kind + "'");
  }

  for (const auto& [label, value] : res.residuals.entries)
    if (!(value < res.gate)) res.failures.push_back(label);

  ordered_json summary;
  summary["name"] = res.name;
  summary["kind"] = res.kind;
  summary["gate"] = res.gate;
  summary["residuals"] = report_to_json(res.residuals);
  summary["pass"] = res.pass();
  summary["failures"] = res.failures;
  summary["outputs"] = res.outputs;
  res.summary = summary;
  if (out.enabled) out.json("summary.json", summary);
  return res;
}

inline RunResult run_scenario_text(const std::string& text,
                                   const RunOptions& opt) {
  ordered_json sc;
  try {
    sc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ShapeError(std::string("scenario: invalid JSON: ") + e.what());
  }
  return run_scenario(sc, opt);
}

}  // namespace griccati
