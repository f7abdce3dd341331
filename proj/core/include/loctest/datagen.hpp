#ifndef LOCTEST_DATAGEN_HPP
#define LOCTEST_DATAGEN_HPP

#include <cstddef>
#include <span>
#include <variant>

#include "loctest/matrix.hpp"
#include "loctest/rng.hpp"
#include "loctest/sym_matrix.hpp"

namespace loctest {

// n iid draws theta + L z with z standard normal and L the symmetric square
// root of sigma. sigma must be positive definite.
Sample sample_mvn(std::span<const double> theta, const SymMatrix& sigma, std::size_t n,
                  Rng& rng);

// Elliptical multivariate t: theta + L z sqrt(nu / w), w ~ chi-square(nu)
// independent of z. nu >= 1 (nu = 1 gives the multivariate Cauchy).
Sample sample_mvt(std::span<const double> theta, const SymMatrix& sigma, double nu,
                  std::size_t n, Rng& rng);

// Gaussian-copula gamma: z ~ N(0, corr), u_j = Phi(z_j),
// y_j = gamma_quantile(shape, rate, u_j) + shift_j. corr must be a correlation
// matrix (unit diagonal, positive definite). Marginals are shifted
// Gamma(shape, rate).
Sample sample_gamma_copula(double shape, double rate, const SymMatrix& corr,
                           std::span<const double> shift, std::size_t n, Rng& rng);

struct MvnSpec {
  Vector theta;
  SymMatrix sigma;
};

struct MvtSpec {
  Vector theta;
  SymMatrix sigma;
  double nu = 1.0;
};

struct GammaCopulaSpec {
  double shape = 2.0;
  double rate = 1.0;
  SymMatrix corr;
  Vector shift;
};

using DistributionSpec = std::variant<MvnSpec, MvtSpec, GammaCopulaSpec>;

std::size_t spec_dimension(const DistributionSpec& spec);

Sample sample_distribution(const DistributionSpec& spec, std::size_t n, Rng& rng);

}  // namespace loctest

#endif  // LOCTEST_DATAGEN_HPP
