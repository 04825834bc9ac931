#pragma once

// Core scalar/matrix aliases and the error taxonomy shared by all modules.

#include <Eigen/Dense>

#include <complex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace griccati {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using Coords = std::vector<double>;

// Malformed dimensions or structurally invalid input.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A matrix that must be inverted is numerically singular.
struct SingularError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string coords_to_string(const Coords& c) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (i) os << ", ";
    os << c[i];
  }
  os << ")";
  return os.str();
}

// Triangular factorization failed: a pivot block is numerically singular.
class NotDecomposableError : public std::runtime_error {
 public:
  NotDecomposableError(int block, const std::string& msg, Coords where = {})
      : std::runtime_error(msg), block_(block), where_(std::move(where)) {}
  // Index (0-based) of the first offending pivot block.
  int block() const noexcept { return block_; }
  // Coordinates of the failure when the factorization ran on a field/grid.
  const Coords& where() const noexcept { return where_; }

 private:
  int block_;
  Coords where_;
};

// An integration produced non-finite values.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& msg, Coords where = {})
      : std::runtime_error(msg), where_(std::move(where)) {}
  const Coords& where() const noexcept { return where_; }

 private:
  Coords where_;
};

// A solution left its chart: the movable singularity of a projective flow.
class BlowupError : public std::runtime_error {
 public:
  BlowupError(const std::string& msg, Coords where = {})
      : std::runtime_error(msg), where_(std::move(where)) {}
  const Coords& where() const noexcept { return where_; }

 private:
  Coords where_;
};

// Multidimensional data whose cross-derivative (curl) test fails.
struct NotIntegrableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Constraint data for the field constructions fails its compatibility check.
struct IntegrabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Largest absolute entry; zero for empty matrices.
inline double max_abs(const CMatrix& x) {
  return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff();
}

inline bool all_finite(const CMatrix& x) {
  return x.real().allFinite() && x.imag().allFinite();
}

inline CMatrix cidentity(Eigen::Index n) { return CMatrix::Identity(n, n); }
inline CMatrix czero(Eigen::Index r, Eigen::Index c) { return CMatrix::Zero(r, c); }

}  // namespace griccati
