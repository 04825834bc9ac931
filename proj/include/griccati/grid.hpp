#pragma once

// Sampled fields on rectangular (uniform per-axis) grids, finite-difference
// partials, and the residual-report container used by every checker.

#include "griccati/field.hpp"
#include "griccati/types.hpp"

#include <map>
#include <numeric>

namespace griccati {

using Axes = std::vector<std::vector<double>>;

inline double axis_step(const std::vector<double>& axis) {
  if (axis.size() < 2) throw ShapeError("axis_step: need at least two nodes");
  const double h = axis[1] - axis[0];
  if (!(h > 0)) throw ShapeError("axis_step: nodes must be increasing");
  for (std::size_t k = 1; k + 1 < axis.size(); ++k) {
    const double hk = axis[k + 1] - axis[k];
    if (std::abs(hk - h) > 1e-9 * std::max(1.0, std::abs(h)))
      throw ShapeError("axis_step: non-uniform axis");
  }
  return h;
}

inline std::vector<double> linspace(double lo, double hi, int count) {
  if (count < 2 || !(hi > lo)) throw ShapeError("linspace: bad axis request");
  std::vector<double> v(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k)
    v[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (count - 1);
  return v;
}

class FieldOnGrid {
 public:
  FieldOnGrid() = default;

  FieldOnGrid(Axes axes, int rows, int cols)
      : axes_(std::move(axes)), rows_(rows), cols_(cols) {
    if (axes_.empty()) throw ShapeError("FieldOnGrid: no axes");
    std::size_t total = 1;
    for (const auto& ax : axes_) {
      if (ax.empty()) throw ShapeError("FieldOnGrid: empty axis");
      total *= ax.size();
    }
    strides_.assign(axes_.size(), 1);
    for (std::size_t a = axes_.size(); a-- > 1;)
      strides_[a - 1] = strides_[a] * axes_[a].size();
    values_.assign(total, CMatrix::Zero(rows_, cols_));
  }

  static FieldOnGrid sample(const MatrixField& f, const Axes& axes) {
    if (static_cast<int>(axes.size()) != f.dim_in())
      throw ShapeError("FieldOnGrid::sample: axis count mismatch");
    FieldOnGrid g(axes, f.rows(), f.cols());
    for (std::size_t i = 0; i < g.size(); ++i) g.flat(i) = f(g.coords_of(i));
    return g;
  }

  const Axes& axes() const noexcept { return axes_; }
  int dim() const noexcept { return static_cast<int>(axes_.size()); }
  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::vector<int> shape() const {
    std::vector<int> s;
    s.reserve(axes_.size());
    for (const auto& ax : axes_) s.push_back(static_cast<int>(ax.size()));
    return s;
  }

  std::size_t ravel(const std::vector<int>& idx) const {
    if (idx.size() != axes_.size()) throw ShapeError("ravel: index arity");
    std::size_t lin = 0;
    for (std::size_t a = 0; a < idx.size(); ++a) {
      if (idx[a] < 0 || idx[a] >= static_cast<int>(axes_[a].size()))
        throw ShapeError("ravel: index out of range");
      lin += static_cast<std::size_t>(idx[a]) * strides_[a];
    }
    return lin;
  }
  std::vector<int> unravel(std::size_t lin) const {
    std::vector<int> idx(axes_.size());
    for (std::size_t a = 0; a < axes_.size(); ++a) {
      idx[a] = static_cast<int>(lin / strides_[a]);
      lin %= strides_[a];
    }
    return idx;
  }

  CMatrix& at(const std::vector<int>& idx) { return values_[ravel(idx)]; }
  const CMatrix& at(const std::vector<int>& idx) const {
    return values_[ravel(idx)];
  }
  CMatrix& flat(std::size_t i) { return values_.at(i); }
  const CMatrix& flat(std::size_t i) const { return values_.at(i); }

  Coords coords_at(const std::vector<int>& idx) const {
    Coords c(axes_.size());
    for (std::size_t a = 0; a < axes_.size(); ++a)
      c[a] = axes_[a][static_cast<std::size_t>(idx[a])];
    return c;
  }
  Coords coords_of(std::size_t lin) const { return coords_at(unravel(lin)); }

  std::map<std::string, std::string> meta;

 private:
  Axes axes_;
  int rows_ = 0, cols_ = 0;
  std::vector<CMatrix> values_;
  std::vector<std::size_t> strides_;
};

// Finite-difference partial along `axis`: central in the interior, one-sided
// second-order at the two boundary slabs.
inline FieldOnGrid partial_derivative(const FieldOnGrid& g, int axis) {
  if (axis < 0 || axis >= g.dim())
    throw ShapeError("partial_derivative: axis out of range");
  const auto& ax = g.axes()[static_cast<std::size_t>(axis)];
  if (ax.size() < 3)
    throw ShapeError("partial_derivative: need at least three nodes");
  const double h = axis_step(ax);
  FieldOnGrid out(g.axes(), g.rows(), g.cols());
  const int len = static_cast<int>(ax.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto idx = g.unravel(i);
    const int k = idx[static_cast<std::size_t>(axis)];
    auto shifted = [&](int dk) {
      auto j = idx;
      j[static_cast<std::size_t>(axis)] = k + dk;
      return g.at(j);
    };
    if (k == 0) {
      out.flat(i) = (-3.0 * shifted(0) + 4.0 * shifted(1) - shifted(2)) / (2.0 * h);
    } else if (k == len - 1) {
      out.flat(i) = (3.0 * shifted(0) - 4.0 * shifted(-1) + shifted(-2)) / (2.0 * h);
    } else {
      out.flat(i) = (shifted(1) - shifted(-1)) / (2.0 * h);
    }
  }
  return out;
}

// True when the multi-index is interior (not on the boundary) of every axis
// listed in `axes_of_interest`.
inline bool interior_index(const FieldOnGrid& g, const std::vector<int>& idx,
                           const std::vector<int>& axes_of_interest) {
  for (int a : axes_of_interest) {
    const int k = idx[static_cast<std::size_t>(a)];
    if (k == 0 || k + 1 == static_cast<int>(g.axes()[static_cast<std::size_t>(a)].size()))
      return false;
  }
  return true;
}

// Ordered label -> max-norm residual map with free-form metadata.
struct ResidualReport {
  std::vector<std::pair<std::string, double>> entries;
  std::map<std::string, std::string> meta;

  void add(const std::string& label, double value) {
    for (auto& e : entries)
      if (e.first == label) {
        e.second = std::max(e.second, value);
        return;
      }
    entries.emplace_back(label, value);
  }
  double max_residual() const {
    double m = 0.0;
    for (const auto& e : entries) m = std::max(m, e.second);
    return m;
  }
  double get(const std::string& label) const {
    for (const auto& e : entries)
      if (e.first == label) return e.second;
    throw ShapeError("ResidualReport: no entry labelled '" + label + "'");
  }
  bool has(const std::string& label) const {
    for (const auto& e : entries)
      if (e.first == label) return true;
    return false;
  }
};

}  // namespace griccati
