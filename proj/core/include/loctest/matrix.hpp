#ifndef LOCTEST_MATRIX_HPP
#define LOCTEST_MATRIX_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace loctest {

using Vector = std::vector<double>;

/// Dense row-major matrix. Samples are stored as one observation per row.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  Vector data_;
};

/// Observations are rows of a Matrix; the alias marks sample-valued
/// arguments in the test interfaces.
using Sample = Matrix;

}  // namespace loctest

#endif
