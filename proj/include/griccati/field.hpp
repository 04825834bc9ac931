#pragma once

// Matrix-valued fields over R^d with a small functional calculus.  A field
// owns an evaluator and, when one can be derived symbolically, a factory for
// its partial-derivative fields; analytic leaves (constants, matrix
// polynomials) chain exact derivatives through sums, products, inverses and
// block compositions.  Leaves without a derivative rule fall back to central
// finite differences.

#include "griccati/matrix_ops.hpp"
#include "griccati/types.hpp"

#include <functional>
#include <memory>
#include <utility>

namespace griccati {

class MatrixField {
 public:
  using Eval = std::function<CMatrix(const Coords&)>;
  using PartialFactory = std::function<MatrixField(int)>;

  MatrixField() = default;

  // Leaf without a symbolic derivative: partials use central differences.
  MatrixField(int dim_in, int rows, int cols, Eval eval, double fd_step = 1e-6)
      : dim_in_(dim_in), rows_(rows), cols_(cols), eval_(std::move(eval)),
        fd_step_(fd_step) {
    check_decl();
  }

  // Field with a symbolic derivative rule.
  MatrixField(int dim_in, int rows, int cols, Eval eval,
              PartialFactory partials, bool analytic)
      : dim_in_(dim_in), rows_(rows), cols_(cols), eval_(std::move(eval)),
        partials_(std::move(partials)), analytic_(analytic) {
    check_decl();
  }

  bool valid() const noexcept { return static_cast<bool>(eval_); }
  int dim_in() const noexcept { return dim_in_; }
  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  // True when every derivative down to the leaves is exact.
  bool analytic() const noexcept { return analytic_; }
  double fd_step() const noexcept { return fd_step_; }

  CMatrix operator()(const Coords& x) const {
    if (!eval_) throw ShapeError("MatrixField: evaluating an empty field");
    if (static_cast<int>(x.size()) != dim_in_)
      throw ShapeError("MatrixField: coordinate dimension mismatch");
    CMatrix v = eval_(x);
    if (v.rows() != rows_ || v.cols() != cols_)
      throw ShapeError("MatrixField: evaluation violates declared shape");
    return v;
  }

  // Derivative field along `axis`; symbolic when available, otherwise a
  // central-difference field with the leaf's step.
  MatrixField partial(int axis) const {
    check_axis(axis);
    if (partials_) return partials_(axis);
    return fd_partial(axis, fd_step_);
  }

  // Point derivative with an explicit fallback step for non-symbolic leaves.
  CMatrix partial_at(const Coords& x, int axis, double h) const {
    check_axis(axis);
    if (partials_) return partials_(axis)(x);
    return fd_partial(axis, h)(x);
  }

 private:
  void check_decl() const {
    if (dim_in_ < 0 || rows_ < 0 || cols_ < 0)
      throw ShapeError("MatrixField: negative dimensions");
  }
  void check_axis(int axis) const {
    if (axis < 0 || axis >= dim_in_)
      throw ShapeError("MatrixField: axis out of range");
  }
  MatrixField fd_partial(int axis, double h) const {
    MatrixField self = *this;
    return MatrixField(
        dim_in_, rows_, cols_,
        [self, axis, h](const Coords& x) {
          Coords lo = x, hi = x;
          lo[static_cast<std::size_t>(axis)] -= h;
          hi[static_cast<std::size_t>(axis)] += h;
          return ((self(hi) - self(lo)) / (2.0 * h)).eval();
        },
        h);
  }

  int dim_in_ = 0, rows_ = 0, cols_ = 0;
  Eval eval_;
  PartialFactory partials_;
  bool analytic_ = false;
  double fd_step_ = 1e-6;
};

// ---- analytic leaves -------------------------------------------------------

inline MatrixField constant_field(int dim_in, const CMatrix& value) {
  const int r = static_cast<int>(value.rows());
  const int c = static_cast<int>(value.cols());
  return MatrixField(
      dim_in, r, c, [value](const Coords&) { return value; },
      [dim_in, r, c](int) {
        return constant_field(dim_in, CMatrix::Zero(r, c));
      },
      true);
}

inline MatrixField zero_field(int dim_in, int rows, int cols) {
  return constant_field(dim_in, CMatrix::Zero(rows, cols));
}

inline MatrixField identity_field(int dim_in, int n) {
  return constant_field(dim_in, cidentity(n));
}

// One term of a matrix polynomial: coeff * prod_i x_i^{exps[i]}.
struct Monomial {
  std::vector<int> exps;
  CMatrix coeff;
};

inline MatrixField polynomial_field(int dim_in,
                                    std::vector<Monomial> terms) {
  if (terms.empty()) throw ShapeError("polynomial_field: no terms");
  const int r = static_cast<int>(terms[0].coeff.rows());
  const int c = static_cast<int>(terms[0].coeff.cols());
  for (const auto& t : terms) {
    if (static_cast<int>(t.exps.size()) != dim_in)
      throw ShapeError("polynomial_field: exponent arity mismatch");
    for (int e : t.exps)
      if (e < 0) throw ShapeError("polynomial_field: negative exponent");
    if (t.coeff.rows() != r || t.coeff.cols() != c)
      throw ShapeError("polynomial_field: coefficient shape mismatch");
  }
  auto shared = std::make_shared<std::vector<Monomial>>(std::move(terms));
  return MatrixField(
      dim_in, r, c,
      [shared, r, c](const Coords& x) {
        CMatrix acc = CMatrix::Zero(r, c);
        for (const auto& t : *shared) {
          double w = 1.0;
          for (std::size_t i = 0; i < x.size(); ++i)
            for (int k = 0; k < t.exps[i]; ++k) w *= x[i];
          acc += w * t.coeff;
        }
        return acc;
      },
      [shared, dim_in, r, c](int axis) {
        std::vector<Monomial> d;
        for (const auto& t : *shared) {
          if (t.exps[static_cast<std::size_t>(axis)] == 0) continue;
          Monomial m = t;
          const int e = m.exps[static_cast<std::size_t>(axis)];
          m.exps[static_cast<std::size_t>(axis)] = e - 1;
          m.coeff = static_cast<double>(e) * m.coeff;
          d.push_back(std::move(m));
        }
        if (d.empty()) return zero_field(dim_in, r, c);
        return polynomial_field(dim_in, std::move(d));
      },
      true);
}

// ---- combinators (derivatives chain through) -------------------------------

inline MatrixField operator+(const MatrixField& f, const MatrixField& g) {
  if (f.dim_in() != g.dim_in() || f.rows() != g.rows() || f.cols() != g.cols())
    throw ShapeError("field sum: shape mismatch");
  return MatrixField(
      f.dim_in(), f.rows(), f.cols(),
      [f, g](const Coords& x) { return (f(x) + g(x)).eval(); },
      [f, g](int axis) { return f.partial(axis) + g.partial(axis); },
      f.analytic() && g.analytic());
}

inline MatrixField scale(Complex a, const MatrixField& f) {
  return MatrixField(
      f.dim_in(), f.rows(), f.cols(),
      [a, f](const Coords& x) { return (a * f(x)).eval(); },
      [a, f](int axis) { return scale(a, f.partial(axis)); }, f.analytic());
}

inline MatrixField operator-(const MatrixField& f, const MatrixField& g) {
  return f + scale(-1.0, g);
}

inline MatrixField operator*(const MatrixField& f, const MatrixField& g) {
  if (f.dim_in() != g.dim_in() || f.cols() != g.rows())
    throw ShapeError("field product: shape mismatch");
  return MatrixField(
      f.dim_in(), f.rows(), g.cols(),
      [f, g](const Coords& x) { return (f(x) * g(x)).eval(); },
      [f, g](int axis) {
        return f.partial(axis) * g + f * g.partial(axis);
      },
      f.analytic() && g.analytic());
}

inline MatrixField inverse_field(const MatrixField& f, double rcond = 1e-13) {
  if (f.rows() != f.cols()) throw ShapeError("inverse_field: must be square");
  // d(f^-1) = -f^-1 (df) f^-1, built lazily to avoid self-reference.
  return MatrixField(
      f.dim_in(), f.rows(), f.cols(),
      [f, rcond](const Coords& x) { return inverse(f(x), rcond); },
      [f, rcond](int axis) {
        MatrixField fi = inverse_field(f, rcond);
        return scale(-1.0, fi * f.partial(axis) * fi);
      },
      f.analytic());
}

// g * f * g^-1.
inline MatrixField conjugated_by(const MatrixField& f, const MatrixField& g) {
  return g * f * inverse_field(g);
}

// 1x1 field times a matrix field.
inline MatrixField scalar_times(const MatrixField& s, const MatrixField& f) {
  if (s.rows() != 1 || s.cols() != 1)
    throw ShapeError("scalar_times: scalar factor must be 1x1");
  if (s.dim_in() != f.dim_in())
    throw ShapeError("scalar_times: coordinate dimension mismatch");
  return MatrixField(
      f.dim_in(), f.rows(), f.cols(),
      [s, f](const Coords& x) { return (s(x)(0, 0) * f(x)).eval(); },
      [s, f](int axis) {
        return scalar_times(s.partial(axis), f) +
               scalar_times(s, f.partial(axis));
      },
      s.analytic() && f.analytic());
}

// Assemble a field from a rectangular grid of block fields.
inline MatrixField block_field(
    const std::vector<std::vector<MatrixField>>& blocks) {
  if (blocks.empty() || blocks[0].empty())
    throw ShapeError("block_field: empty block grid");
  const int dim = blocks[0][0].dim_in();
  int rows = 0;
  for (const auto& row : blocks) {
    if (row.size() != blocks[0].size())
      throw ShapeError("block_field: ragged block grid");
    rows += row[0].rows();
  }
  int cols = 0;
  for (const auto& f : blocks[0]) cols += f.cols();
  for (const auto& row : blocks) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j].dim_in() != dim)
        throw ShapeError("block_field: coordinate dimension mismatch");
      if (row[j].rows() != row[0].rows() ||
          row[j].cols() != blocks[0][j].cols())
        throw ShapeError("block_field: inconsistent block shapes");
    }
  }
  bool analytic = true;
  for (const auto& row : blocks)
    for (const auto& f : row) analytic = analytic && f.analytic();
  auto shared =
      std::make_shared<std::vector<std::vector<MatrixField>>>(blocks);
  return MatrixField(
      dim, rows, cols,
      [shared, rows, cols](const Coords& x) {
        CMatrix out(rows, cols);
        int r0 = 0;
        for (const auto& row : *shared) {
          int c0 = 0;
          const int rh = row[0].rows();
          for (const auto& f : row) {
            out.block(r0, c0, rh, f.cols()) = f(x);
            c0 += f.cols();
          }
          r0 += rh;
        }
        return out;
      },
      [shared](int axis) {
        std::vector<std::vector<MatrixField>> d;
        d.reserve(shared->size());
        for (const auto& row : *shared) {
          std::vector<MatrixField> drow;
          drow.reserve(row.size());
          for (const auto& f : row) drow.push_back(f.partial(axis));
          d.push_back(std::move(drow));
        }
        return block_field(d);
      },
      analytic);
}

// View a D-coordinate field as a field of the coordinates `free_axes`, the
// remaining coordinates frozen at `base`.
inline MatrixField restrict_field(const MatrixField& f, const Coords& base,
                                  const std::vector<int>& free_axes) {
  if (static_cast<int>(base.size()) != f.dim_in())
    throw ShapeError("restrict_field: base dimension mismatch");
  for (int a : free_axes)
    if (a < 0 || a >= f.dim_in())
      throw ShapeError("restrict_field: axis out of range");
  const int d = static_cast<int>(free_axes.size());
  return MatrixField(
      d, f.rows(), f.cols(),
      [f, base, free_axes](const Coords& y) {
        Coords x = base;
        for (std::size_t k = 0; k < free_axes.size(); ++k)
          x[static_cast<std::size_t>(free_axes[k])] = y[k];
        return f(x);
      },
      [f, base, free_axes](int axis) {
        return restrict_field(f.partial(free_axes[static_cast<std::size_t>(axis)]),
                              base, free_axes);
      },
      f.analytic());
}

// Lift a field of k coordinates to dim_in coordinates: g(x) = f(x[axes]).
inline MatrixField embed_field(const MatrixField& f, int dim_in,
                               const std::vector<int>& axes) {
  if (static_cast<int>(axes.size()) != f.dim_in())
    throw ShapeError("embed_field: axis list must match field arity");
  for (int a : axes)
    if (a < 0 || a >= dim_in) throw ShapeError("embed_field: axis out of range");
  return MatrixField(
      dim_in, f.rows(), f.cols(),
      [f, axes](const Coords& x) {
        Coords y(axes.size());
        for (std::size_t k = 0; k < axes.size(); ++k)
          y[k] = x[static_cast<std::size_t>(axes[k])];
        return f(y);
      },
      [f, dim_in, axes](int axis) {
        for (std::size_t k = 0; k < axes.size(); ++k)
          if (axes[k] == axis)
            return embed_field(f.partial(static_cast<int>(k)), dim_in, axes);
        return zero_field(dim_in, f.rows(), f.cols());
      },
      f.analytic());
}

}  // namespace griccati
