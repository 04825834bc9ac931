#pragma once

// Integer gradation of the n-by-n complex matrices induced by a block
// partition n = n_0 + ... + n_{p-1}.  The (r,s) block carries grade s - r;
// negative grades sit below the block diagonal, positive grades above.

#include "griccati/types.hpp"

namespace griccati {

enum class GradePart { negative, zero, positive, nonpositive, nonnegative };

class GradedContext {
 public:
  explicit GradedContext(std::vector<int> block_sizes)
      : sizes_(std::move(block_sizes)) {
    if (sizes_.size() < 2)
      throw ShapeError("GradedContext: need at least two blocks");
    offsets_.reserve(sizes_.size() + 1);
    int off = 0;
    for (int s : sizes_) {
      if (s <= 0) throw ShapeError("GradedContext: block sizes must be positive");
      offsets_.push_back(off);
      off += s;
    }
    offsets_.push_back(off);
  }

  int dim() const noexcept { return offsets_.back(); }
  int blocks() const noexcept { return static_cast<int>(sizes_.size()); }
  const std::vector<int>& block_sizes() const noexcept { return sizes_; }
  int block_size(int r) const { return sizes_.at(static_cast<std::size_t>(r)); }
  int offset(int r) const { return offsets_.at(static_cast<std::size_t>(r)); }
  static int grade(int r, int s) noexcept { return s - r; }

  void check_shape(const CMatrix& a) const {
    if (a.rows() != dim() || a.cols() != dim()) {
      std::ostringstream os;
      os << "expected " << dim() << "x" << dim() << " matrix, got " << a.rows()
         << "x" << a.cols();
      throw ShapeError(os.str());
    }
  }

  CMatrix block(const CMatrix& a, int r, int s) const {
    check_shape(a);
    check_block_index(r);
    check_block_index(s);
    return a.block(offset(r), offset(s), block_size(r), block_size(s));
  }

  void set_block(CMatrix& a, int r, int s, const CMatrix& b) const {
    check_shape(a);
    check_block_index(r);
    check_block_index(s);
    if (b.rows() != block_size(r) || b.cols() != block_size(s))
      throw ShapeError("set_block: block shape mismatch");
    a.block(offset(r), offset(s), block_size(r), block_size(s)) = b;
  }

  // Zero out every block whose grade does not belong to the requested part.
  CMatrix project(const CMatrix& a, GradePart part) const {
    check_shape(a);
    CMatrix out = CMatrix::Zero(dim(), dim());
    for (int r = 0; r < blocks(); ++r)
      for (int s = 0; s < blocks(); ++s)
        if (keeps(part, grade(r, s)))
          out.block(offset(r), offset(s), block_size(r), block_size(s)) =
              a.block(offset(r), offset(s), block_size(r), block_size(s));
    return out;
  }

  // The component of fixed grade m (m = s - r).
  CMatrix grade_component(const CMatrix& a, int m) const {
    check_shape(a);
    CMatrix out = CMatrix::Zero(dim(), dim());
    for (int r = 0; r < blocks(); ++r) {
      const int s = r + m;
      if (s < 0 || s >= blocks()) continue;
      out.block(offset(r), offset(s), block_size(r), block_size(s)) =
          a.block(offset(r), offset(s), block_size(r), block_size(s));
    }
    return out;
  }

  // Structure predicates.  tol = 0 demands exact structural zeros/ones.
  bool is_block_diagonal(const CMatrix& a, double tol = 0.0) const {
    check_shape(a);
    return offdiag_part_norm(a) <= tol;
  }
  bool is_unit_upper(const CMatrix& a, double tol = 0.0) const {
    check_shape(a);
    return max_abs(project(a, GradePart::negative)) <= tol &&
           max_abs(project(a, GradePart::zero) - cidentity(dim())) <= tol;
  }
  bool is_unit_lower(const CMatrix& a, double tol = 0.0) const {
    check_shape(a);
    return max_abs(project(a, GradePart::positive)) <= tol &&
           max_abs(project(a, GradePart::zero) - cidentity(dim())) <= tol;
  }

  bool operator==(const GradedContext& other) const noexcept {
    return sizes_ == other.sizes_;
  }

 private:
  void check_block_index(int r) const {
    if (r < 0 || r >= blocks()) throw ShapeError("block index out of range");
  }
  static bool keeps(GradePart part, int g) noexcept {
    switch (part) {
      case GradePart::negative: return g < 0;
      case GradePart::zero: return g == 0;
      case GradePart::positive: return g > 0;
      case GradePart::nonpositive: return g <= 0;
      case GradePart::nonnegative: return g >= 0;
    }
    return false;
  }
  double offdiag_part_norm(const CMatrix& a) const {
    return std::max(max_abs(project(a, GradePart::negative)),
                    max_abs(project(a, GradePart::positive)));
  }

  std::vector<int> sizes_;
  std::vector<int> offsets_;
};

}  // namespace griccati
