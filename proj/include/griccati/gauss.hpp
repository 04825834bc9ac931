#pragma once

// Block-triangular (Gauss) factorization adapted to a graded context:
//   a = lower * zero * upper
// with `lower` unit block-lower-triangular, `zero` block-diagonal and `upper`
// unit block-upper-triangular.  The factorization exists iff every leading
// pivot (the Schur complement of the preceding blocks) is invertible; it is
// computed by block elimination, which unrolls the recursive two-block split
//   a = [[I, 0], [a21*inv(a11), L]] * diag(a11, Z) * [[I, inv(a11)*a12], [0, U]]
// applied to successive Schur complements.

#include "griccati/gradation.hpp"
#include "griccati/matrix_ops.hpp"

namespace griccati {

struct GaussFactors {
  CMatrix lower;  // unit block-lower-triangular
  CMatrix zero;   // block-diagonal
  CMatrix upper;  // unit block-upper-triangular

  CMatrix reconstruct() const { return lower * zero * upper; }
};

// Factorize `a` over `ctx`.  Throws NotDecomposableError carrying the index
// of the first pivot block whose smallest singular value falls at or below
// tol * ||a||_2 (failure of the factorization chart).
inline GaussFactors gauss_decompose(const GradedContext& ctx, const CMatrix& a,
                                    double tol = 1e-10) {
  ctx.check_shape(a);
  if (!all_finite(a))
    throw NotDecomposableError(0, "gauss_decompose: non-finite entries");
  const int n = ctx.dim();
  const int p = ctx.blocks();

  GaussFactors f{cidentity(n), CMatrix::Zero(n, n), cidentity(n)};
  CMatrix work = a;  // trailing principal part holds the running Schur complement
  const double scale = op_norm(a);

  for (int r = 0; r < p; ++r) {
    const int orow = ctx.offset(r);
    const int nr = ctx.block_size(r);
    const CMatrix pivot = work.block(orow, orow, nr, nr);
    const auto [smax, smin] = singular_range(pivot);
    (void)smax;
    if (!(smin > tol * scale)) {
      std::ostringstream os;
      os << "gauss_decompose: pivot block " << r
         << " numerically singular (sigma_min=" << smin
         << ", gate=" << tol * scale << ")";
      throw NotDecomposableError(r, os.str());
    }
    const CMatrix pivinv = pivot.inverse();
    f.zero.block(orow, orow, nr, nr) = pivot;

    for (int s = r + 1; s < p; ++s) {
      const int os_ = ctx.offset(s);
      const int ns = ctx.block_size(s);
      f.upper.block(orow, os_, nr, ns) = pivinv * work.block(orow, os_, nr, ns);
      f.lower.block(os_, orow, ns, nr) = work.block(os_, orow, ns, nr) * pivinv;
    }
    // Schur-complement update of the trailing blocks.
    for (int s = r + 1; s < p; ++s) {
      const int os_ = ctx.offset(s);
      const int ns = ctx.block_size(s);
      for (int t = r + 1; t < p; ++t) {
        const int ot = ctx.offset(t);
        const int nt = ctx.block_size(t);
        work.block(os_, ot, ns, nt) -= f.lower.block(os_, orow, ns, nr) *
                                       work.block(orow, ot, nr, nt);
      }
    }
  }
  return f;
}

}  // namespace griccati
