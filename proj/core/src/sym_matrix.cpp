#include "loctest/sym_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "loctest/errors.hpp"

namespace loctest {

SymMatrix SymMatrix::identity(std::size_t dim) {
  SymMatrix m(dim);
  for (std::size_t i = 0; i < dim; ++i) m.set(i, i, 1.0);
  return m;
}

SymMatrix SymMatrix::diagonal(std::span<const double> d) {
  SymMatrix m(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m.set(i, i, d[i]);
  return m;
}

SymMatrix SymMatrix::from_matrix(const Matrix& a) {
  SymMatrix m(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j <= i; ++j) m.set(i, j, 0.5 * (a(i, j) + a(j, i)));
  return m;
}

double SymMatrix::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) t += (*this)(i, i);
  return t;
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& other) {
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

SymMatrix& SymMatrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

double quad_form(const SymMatrix& a, std::span<const double> x) {
  const std::size_t k = a.dim();
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < k; ++j) row += a(i, j) * x[j];
    total += x[i] * row;
  }
  return total;
}

Vector mat_vec(const SymMatrix& a, std::span<const double> x) {
  const std::size_t k = a.dim();
  Vector out(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < k; ++j) row += a(i, j) * x[j];
    out[i] = row;
  }
  return out;
}

SymEigen sym_eigen(const SymMatrix& a) {
  const std::size_t k = a.dim();
  Matrix work(k, k), vecs(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    vecs(i, i) = 1.0;
    for (std::size_t j = 0; j < k; ++j) work(i, j) = a(i, j);
  }

  // Cyclic Jacobi sweeps; plenty for the k <= 16 matrices we use.
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p + 1 < k; ++p)
      for (std::size_t q = p + 1; q < k; ++q) off += work(p, q) * work(p, q);
    if (off <= 1e-30 * (1.0 + std::abs(work(0, 0)))) break;

    for (std::size_t p = 0; p + 1 < k; ++p) {
      for (std::size_t q = p + 1; q < k; ++q) {
        const double apq = work(p, q);
        if (apq == 0.0) continue;
        const double app = work(p, p), aqq = work(q, q);
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        for (std::size_t i = 0; i < k; ++i) {
          const double wip = work(i, p), wiq = work(i, q);
          work(i, p) = c * wip - s * wiq;
          work(i, q) = s * wip + c * wiq;
        }
        for (std::size_t i = 0; i < k; ++i) {
          const double wpi = work(p, i), wqi = work(q, i);
          work(p, i) = c * wpi - s * wqi;
          work(q, i) = s * wpi + c * wqi;
        }
        for (std::size_t i = 0; i < k; ++i) {
          const double vip = vecs(i, p), viq = vecs(i, q);
          vecs(i, p) = c * vip - s * viq;
          vecs(i, q) = s * vip + c * viq;
        }
      }
    }
  }

  SymEigen result;
  result.values.resize(k);
  for (std::size_t i = 0; i < k; ++i) result.values[i] = work(i, i);

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a_, std::size_t b_) { return result.values[a_] < result.values[b_]; });

  Vector sorted(k);
  Matrix sorted_vecs(k, k);
  for (std::size_t j = 0; j < k; ++j) {
    sorted[j] = result.values[order[j]];
    for (std::size_t i = 0; i < k; ++i) sorted_vecs(i, j) = vecs(i, order[j]);
  }
  result.values = std::move(sorted);
  result.vectors = std::move(sorted_vecs);
  return result;
}

namespace {

// Lower Cholesky factor; returns false when a pivot is not positive.
bool cholesky_lower(const SymMatrix& a, Matrix& lower) {
  const std::size_t k = a.dim();
  lower = Matrix(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double sum = a(i, j);
      for (std::size_t m = 0; m < j; ++m) sum -= lower(i, m) * lower(j, m);
      if (i == j) {
        if (sum <= 0.0 || !std::isfinite(sum)) return false;
        lower(i, i) = std::sqrt(sum);
      } else {
        lower(i, j) = sum / lower(j, j);
      }
    }
  }
  return true;
}

SymMatrix add_ridge(const SymMatrix& m, double ridge) {
  SymMatrix a = m;
  if (ridge != 0.0)
    for (std::size_t i = 0; i < a.dim(); ++i) a.add(i, i, ridge);
  return a;
}

double max_abs_residual(const SymMatrix& a, const SymMatrix& x) {
  const std::size_t k = a.dim();
  double worst = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double v = 0.0;
      for (std::size_t m = 0; m < k; ++m) v += a(i, m) * x(m, j);
      if (i == j) v -= 1.0;
      worst = std::max(worst, std::abs(v));
    }
  }
  return worst;
}

}  // namespace

SymMatrix sym_inverse(const SymMatrix& m, double ridge) {
  const std::size_t k = m.dim();
  const SymMatrix a = add_ridge(m, ridge);

  if (condition_estimate(a) > 1e12)
    throw singular_matrix_error("symmetric matrix numerically singular (condition > 1e12)");

  Matrix lower;
  if (!cholesky_lower(a, lower))
    throw singular_matrix_error("symmetric matrix not positive definite");

  // Invert L, then assemble A^-1 = L^-T L^-1.
  Matrix linv(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    linv(i, i) = 1.0 / lower(i, i);
    for (std::size_t j = i + 1; j < k; ++j) {
      double sum = 0.0;
      for (std::size_t m = i; m < j; ++m) sum -= lower(j, m) * linv(m, i);
      linv(j, i) = sum / lower(j, j);
    }
  }
  SymMatrix inv(k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double sum = 0.0;
      for (std::size_t m = i; m < k; ++m) sum += linv(m, i) * linv(m, j);
      inv.set(i, j, sum);
    }

  // Newton refinement, X <- X (2I - A X): squares the residual while the
  // update beats the rounding floor (about cond^2 * epsilon). Near the
  // condition limit the floor exceeds the Cholesky residual from the start,
  // and iterating would amplify rounding instead of contracting it, so a pass
  // that fails to reduce the measured residual is rejected.
  double best = max_abs_residual(a, inv);
  for (int pass = 0; pass < 3 && best > 1e-12; ++pass) {
    Matrix ax(k, k);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        double v = 0.0;
        for (std::size_t mI = 0; mI < k; ++mI) v += a(i, mI) * inv(mI, j);
        ax(i, j) = (i == j ? 2.0 : 0.0) - v;
      }
    SymMatrix refined(k);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j <= i; ++j) {
        double v = 0.0;
        for (std::size_t mI = 0; mI < k; ++mI) v += inv(i, mI) * ax(mI, j);
        refined.set(i, j, v);
      }
    const double refined_residual = max_abs_residual(a, refined);
    if (refined_residual >= best) break;
    inv = refined;
    best = refined_residual;
  }
  return inv;
}

SymMatrix sym_sqrt(const SymMatrix& m) {
  const SymEigen eig = sym_eigen(m);
  const std::size_t k = m.dim();
  SymMatrix out(k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double v = 0.0;
      for (std::size_t e = 0; e < k; ++e)
        v += eig.vectors(i, e) * std::sqrt(std::max(0.0, eig.values[e])) * eig.vectors(j, e);
      out.set(i, j, v);
    }
  return out;
}

SymMatrix sym_inv_sqrt(const SymMatrix& m) {
  const SymEigen eig = sym_eigen(m);
  const std::size_t k = m.dim();
  if (eig.values.front() <= 0.0)
    throw singular_matrix_error("inverse square root of a non positive definite matrix");
  SymMatrix out(k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double v = 0.0;
      for (std::size_t e = 0; e < k; ++e)
        v += eig.vectors(i, e) / std::sqrt(eig.values[e]) * eig.vectors(j, e);
      out.set(i, j, v);
    }
  return out;
}

double condition_estimate(const SymMatrix& m) {
  const SymEigen eig = sym_eigen(m);
  const double lo = eig.values.front(), hi = eig.values.back();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

}  // namespace loctest
