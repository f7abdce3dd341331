// Shared oracle machinery for the test suites. Everything here is written
// from first principles (quadrature, bisection, grid search, from-scratch
// linear algebra) so library results can be checked against independent
// computations rather than against themselves.
#ifndef LOCTEST_TESTS_ORACLE_HELPERS_HPP
#define LOCTEST_TESTS_ORACLE_HELPERS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "loctest/matrix.hpp"

namespace oracle {

// ---- quadrature and inversion -------------------------------------------

// Composite Simpson rule on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      std::size_t n = 2000) {
  if (n % 2 == 1) ++n;
  const double h = (b - a) / static_cast<double>(n);
  double sum = f(a) + f(b);
  for (std::size_t i = 1; i < n; ++i)
    sum += f(a + h * static_cast<double>(i)) * (i % 2 == 1 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

// CDF at x of a density supported on [lower, inf), integrated numerically.
inline double cdf_by_integration(const std::function<double(double)>& density, double lower,
                                 double x, std::size_t panels = 4000) {
  if (x <= lower) return 0.0;
  return simpson(density, lower, x, panels);
}

// CDF at x of a density on (0, inf) with a possible power singularity at the
// origin (gamma-type shapes t^{a-1} e^{-bt}): integrates under t = u^4, which
// turns the spike into a smooth u^{4a-1} factor that plain panels handle.
inline double cdf_by_quartic_integration(const std::function<double(double)>& density, double x,
                                         std::size_t panels = 20000) {
  if (x <= 0.0) return 0.0;
  const auto g = [&](double u) {
    if (u <= 0.0) return 0.0;  // limit of u^{4a-1} as u -> 0 for a > 0
    const double t = u * u * u * u;
    return density(t) * 4.0 * u * u * u;
  };
  return simpson(g, 0.0, std::pow(x, 0.25), panels);
}

// Solves cdf(x) = p by bisection on [lo, hi]; cdf must be nondecreasing.
inline double quantile_by_bisection(const std::function<double(double)>& cdf, double lo,
                                    double hi, double p, double tol = 1e-10) {
  double flo = cdf(lo) - p, fhi = cdf(hi) - p;
  if (flo > 0.0 || fhi < 0.0) throw std::runtime_error("bisection bracket does not contain root");
  for (int it = 0; it < 200 && hi - lo > tol * (1.0 + hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) - p < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// ---- reference densities --------------------------------------------------

inline double chi2_density(double df, double x) {
  if (x <= 0.0) return 0.0;
  const double half = 0.5 * df;
  return std::exp((half - 1.0) * std::log(x) - 0.5 * x - half * std::log(2.0) -
                  std::lgamma(half));
}

inline double gamma_density(double shape, double rate, double x) {
  if (x <= 0.0) return 0.0;
  return std::exp(shape * std::log(rate) + (shape - 1.0) * std::log(x) - rate * x -
                  std::lgamma(shape));
}

inline double normal_density(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846);
}

// ---- from-scratch linear algebra ------------------------------------------

using Mat = std::vector<std::vector<double>>;

inline Mat mat_identity(std::size_t k) {
  Mat m(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i) m[i][i] = 1.0;
  return m;
}

// Gauss-Jordan inverse with partial pivoting; throws on (near) singularity.
inline Mat mat_inverse(Mat a) {
  const std::size_t k = a.size();
  Mat inv = mat_identity(k);
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < k; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (std::abs(a[piv][col]) < 1e-14) throw std::runtime_error("oracle inverse: singular");
    std::swap(a[piv], a[col]);
    std::swap(inv[piv], inv[col]);
    const double d = a[col][col];
    for (std::size_t j = 0; j < k; ++j) {
      a[col][j] /= d;
      inv[col][j] /= d;
    }
    for (std::size_t r = 0; r < k; ++r) {
      if (r == col) continue;
      const double f = a[r][col];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < k; ++j) {
        a[r][j] -= f * a[col][j];
        inv[r][j] -= f * inv[col][j];
      }
    }
  }
  return inv;
}

inline double quad(const Mat& a, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) s += x[i] * a[i][j] * x[j];
  return s;
}

// ---- vector arithmetic ------------------------------------------------------

inline double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline loctest::Vector unit_of(std::span<const double> v) {
  loctest::Vector u(v.begin(), v.end());
  const double n = norm(v);
  if (n == 0.0) {
    std::fill(u.begin(), u.end(), 0.0);
    return u;
  }
  for (double& x : u) x /= n;
  return u;
}

// ---- weighted geometric median by grid search -------------------------------

// Coarse-to-fine grid minimizer of sum_j w_j |y_j - x| over the bounding box
// of the points (the minimizer always lies in the convex hull). Final grid
// pitch is `pitch`; the returned point is within pitch * sqrt(k) of the true
// minimizer for a convex objective.
inline loctest::Vector grid_median(const loctest::Matrix& points,
                                   std::span<const double> weights, double pitch = 5e-4) {
  const std::size_t n = points.rows(), k = points.cols();
  if (k != 2) throw std::runtime_error("grid_median oracle supports k = 2 only");
  const auto objective = [&](double x, double y) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double dx = points(j, 0) - x, dy = points(j, 1) - y;
      s += weights[j] * std::sqrt(dx * dx + dy * dy);
    }
    return s;
  };
  double lo0 = points(0, 0), hi0 = lo0, lo1 = points(0, 1), hi1 = lo1;
  for (std::size_t j = 1; j < n; ++j) {
    lo0 = std::min(lo0, points(j, 0));
    hi0 = std::max(hi0, points(j, 0));
    lo1 = std::min(lo1, points(j, 1));
    hi1 = std::max(hi1, points(j, 1));
  }
  double bx = 0.5 * (lo0 + hi0), by = 0.5 * (lo1 + hi1);
  double span = std::max({hi0 - lo0, hi1 - lo1, pitch});
  double step = span / 40.0;
  for (;;) {
    double best = objective(bx, by);
    double nbx = bx, nby = by;
    for (int i = -40; i <= 40; ++i)
      for (int j = -40; j <= 40; ++j) {
        const double x = bx + step * i, y = by + step * j;
        const double v = objective(x, y);
        if (v < best) {
          best = v;
          nbx = x;
          nby = y;
        }
      }
    bx = nbx;
    by = nby;
    if (step <= pitch) break;
    step = std::max(step / 10.0, pitch);
  }
  return {bx, by};
}

// ---- empirical distribution distances ---------------------------------------

// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
inline double ks_distance(std::vector<double> values,
                          const std::function<double(double)>& cdf) {
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double c = cdf(values[i]);
    d = std::max(d, std::abs(c - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - c));
  }
  return d;
}

// Two-sample Kolmogorov-Smirnov distance.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / static_cast<double>(a.size()) -
                             static_cast<double>(j) / static_cast<double>(b.size())));
  }
  return d;
}

}  // namespace oracle

#endif
