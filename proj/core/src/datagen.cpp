#include "loctest/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "loctest/numerics.hpp"

namespace loctest {

namespace {

// Symmetric square root with a positive-definiteness check.
Matrix pd_factor(const SymMatrix& sigma, const char* what) {
  const std::size_t k = sigma.dim();
  if (k == 0) throw std::domain_error(std::string(what) + ": empty matrix");
  const SymEigen eig = sym_eigen(sigma);
  if (!(eig.values.front() > 0.0))
    throw std::domain_error(std::string(what) + ": matrix is not positive definite");
  Matrix f(k, k);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) {
      double s = 0.0;
      for (std::size_t c = 0; c < k; ++c)
        s += eig.vectors(a, c) * std::sqrt(eig.values[c]) * eig.vectors(b, c);
      f(a, b) = s;
    }
  return f;
}

void check_dim(std::span<const double> v, std::size_t k, const char* what) {
  if (v.size() != k) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

}  // namespace

Sample sample_mvn(std::span<const double> theta, const SymMatrix& sigma, std::size_t n,
                  Rng& rng) {
  const std::size_t k = sigma.dim();
  check_dim(theta, k, "sample_mvn");
  const Matrix factor = pd_factor(sigma, "sample_mvn");
  Sample out(n, k);
  Vector z(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : z) v = rng.normal();
    for (std::size_t a = 0; a < k; ++a) {
      double s = theta[a];
      for (std::size_t b = 0; b < k; ++b) s += factor(a, b) * z[b];
      out(i, a) = s;
    }
  }
  return out;
}

Sample sample_mvt(std::span<const double> theta, const SymMatrix& sigma, double nu,
                  std::size_t n, Rng& rng) {
  const std::size_t k = sigma.dim();
  check_dim(theta, k, "sample_mvt");
  if (!(nu >= 1.0)) throw std::domain_error("sample_mvt: need nu >= 1");
  const Matrix factor = pd_factor(sigma, "sample_mvt");
  Sample out(n, k);
  Vector z(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : z) v = rng.normal();
    const double w = rng.chi_square(nu);
    const double scale = std::sqrt(nu / w);
    for (std::size_t a = 0; a < k; ++a) {
      double s = 0.0;
      for (std::size_t b = 0; b < k; ++b) s += factor(a, b) * z[b];
      out(i, a) = theta[a] + scale * s;
    }
  }
  return out;
}

Sample sample_gamma_copula(double shape, double rate, const SymMatrix& corr,
                           std::span<const double> shift, std::size_t n, Rng& rng) {
  const std::size_t k = corr.dim();
  check_dim(shift, k, "sample_gamma_copula");
  if (!(shape > 0.0) || !(rate > 0.0))
    throw std::domain_error("sample_gamma_copula: shape and rate must be positive");
  for (std::size_t a = 0; a < k; ++a)
    if (std::abs(corr(a, a) - 1.0) > 1e-12)
      throw std::domain_error("sample_gamma_copula: correlation matrix needs a unit diagonal");
  const Matrix factor = pd_factor(corr, "sample_gamma_copula");

  const double u_lo = std::numeric_limits<double>::min();
  const double u_hi = std::nextafter(1.0, 0.0);
  Sample out(n, k);
  Vector z(k), g(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : z) v = rng.normal();
    for (std::size_t a = 0; a < k; ++a) {
      double s = 0.0;
      for (std::size_t b = 0; b < k; ++b) s += factor(a, b) * z[b];
      g[a] = s;
    }
    for (std::size_t a = 0; a < k; ++a) {
      const double u = std::clamp(normal_cdf(g[a]), u_lo, u_hi);
      out(i, a) = gamma_quantile(shape, rate, u) + shift[a];
    }
  }
  return out;
}

std::size_t spec_dimension(const DistributionSpec& spec) {
  return std::visit([](const auto& s) -> std::size_t {
    using T = std::decay_t<decltype(s)>;
    if constexpr (std::is_same_v<T, GammaCopulaSpec>) return s.corr.dim();
    else return s.sigma.dim();
  }, spec);
}

Sample sample_distribution(const DistributionSpec& spec, std::size_t n, Rng& rng) {
  return std::visit(
      [&](const auto& s) -> Sample {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, MvnSpec>) {
          return sample_mvn(s.theta, s.sigma, n, rng);
        } else if constexpr (std::is_same_v<T, MvtSpec>) {
          return sample_mvt(s.theta, s.sigma, s.nu, n, rng);
        } else {
          return sample_gamma_copula(s.shape, s.rate, s.corr, s.shift, n, rng);
        }
      },
      spec);
}

}  // namespace loctest
