#ifndef LOCTEST_SYM_MATRIX_HPP
#define LOCTEST_SYM_MATRIX_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "loctest/matrix.hpp"

namespace loctest {

/// Symmetric k x k matrix with full row-major storage. Writes go through
/// set()/add() so both triangles stay in sync. Intended for the small
/// scatter and information matrices of this library (k <= 16).
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t dim) : dim_(dim), data_(dim * dim, 0.0) {}

  static SymMatrix identity(std::size_t dim);
  static SymMatrix diagonal(std::span<const double> d);
  /// Symmetrizes (a + a^T)/2 of a square matrix.
  static SymMatrix from_matrix(const Matrix& a);

  std::size_t dim() const { return dim_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * dim_ + j]; }
  void set(std::size_t i, std::size_t j, double v) {
    data_[i * dim_ + j] = v;
    data_[j * dim_ + i] = v;
  }
  void add(std::size_t i, std::size_t j, double v) {
    data_[i * dim_ + j] += v;
    if (i != j) data_[j * dim_ + i] += v;
  }

  double trace() const;
  SymMatrix& operator+=(const SymMatrix& other);
  SymMatrix& operator*=(double s);
  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator*(SymMatrix a, double s) { return a *= s; }

  const double* data() const { return data_.data(); }

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

/// x^T A x
double quad_form(const SymMatrix& a, std::span<const double> x);

/// A x
Vector mat_vec(const SymMatrix& a, std::span<const double> x);

/// Eigen decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Eigenvalues ascending; vectors(i, j) is component i of eigenvector j.
struct SymEigen {
  Vector values;
  Matrix vectors;
};
SymEigen sym_eigen(const SymMatrix& a);

/// Inverse of (m + ridge I) through Cholesky with iterative refinement.
/// Throws singular_matrix_error when the condition estimate exceeds 1e12
/// or the ridged matrix is not positive definite.
SymMatrix sym_inverse(const SymMatrix& m, double ridge = 0.0);

/// Symmetric square root of a positive semidefinite matrix (eigenvalues
/// clipped at zero).
SymMatrix sym_sqrt(const SymMatrix& m);

/// Inverse symmetric square root of a positive definite matrix.
SymMatrix sym_inv_sqrt(const SymMatrix& m);

/// lambda_max / lambda_min from the Jacobi eigenvalues; +inf when the
/// smallest eigenvalue is zero or negative.
double condition_estimate(const SymMatrix& m);

}  // namespace loctest

#endif
