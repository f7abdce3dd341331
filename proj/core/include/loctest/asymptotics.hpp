#ifndef LOCTEST_ASYMPTOTICS_HPP
#define LOCTEST_ASYMPTOTICS_HPP

#include <cstdint>
#include <functional>
#include <span>

#include "loctest/matrix.hpp"
#include "loctest/rng.hpp"
#include "loctest/sym_matrix.hpp"

namespace loctest {

// The two population matrices behind the limiting distribution of the
// spatial median: with u(y) = (y - theta)/|y - theta|,
//   u_mat = E[u u'],   v_mat = E[(I - u u') / |y - theta|].
// The asymptotic covariance is the sandwich v_mat^-1 u_mat v_mat^-1.
struct SandwichPair {
  SymMatrix u_mat;
  SymMatrix v_mat;
  std::size_t mc_size = 0;   // draws (or sample rows) actually averaged
  Vector theta;              // evaluation point
  std::size_t skipped = 0;   // observations within 1e-12 of theta, excluded
};

// A smooth parametric location model: a sampler for Y at a given location,
// the location score (gradient of the log density in theta), and the Fisher
// information. Supplies everything the local-power formulas need.
struct ModelSpec {
  std::size_t dim = 0;
  std::function<void(std::span<const double> theta, Rng&, std::span<double> out)> sampler;
  std::function<void(std::span<const double> theta, std::span<const double> y,
                     std::span<double> out)>
      score;
  std::function<SymMatrix(std::span<const double> theta)> fisher;
};

// Gaussian location family with fixed covariance: score Sigma^-1 (y - theta),
// information Sigma^-1.
ModelSpec gaussian_model(const SymMatrix& sigma);

// Elliptical t location family with fixed scatter and nu >= 1 degrees of
// freedom: score (nu + k) Sigma^-1 (y - theta) / (nu + Q) with
// Q = (y - theta)' Sigma^-1 (y - theta), information (nu+k)/(nu+k+2) Sigma^-1.
ModelSpec t_model(const SymMatrix& sigma, double nu);

// Monte Carlo estimate of the sandwich matrices at theta under the model.
// Requires mc_size >= 1000. Draws within 1e-12 of theta are skipped and
// counted; if every draw is skipped a domain error is raised.
SandwichPair estimate_sandwich(const ModelSpec& model, std::span<const double> theta,
                               std::size_t mc_size, Rng& rng);

// Plug-in estimate of the same matrices from an observed sample (n > k).
SandwichPair estimate_sandwich(const Sample& data, std::span<const double> theta);

// Drift of sqrt(n)(median - theta0) under the contiguous alternative
// theta0 + h/sqrt(n): delta = E[-v_mat^-1 u(Y) (score(Y)' fisher^-1 h)],
// estimated in the same Monte Carlo pass as the sandwich matrices.
struct DriftEstimate {
  Vector delta;
  SymMatrix sandwich;  // v_mat^-1 u_mat v_mat^-1
  std::size_t mc_size = 0;
  std::size_t skipped = 0;
};

DriftEstimate estimate_drift(const ModelSpec& model, std::span<const double> theta0,
                             std::span<const double> h, std::size_t mc_size, Rng& rng);

// Theoretical asymptotic power of the one-sample location test at level
// alpha against theta0 + h/sqrt(n): the upper tail of a noncentral
// chi-square(k) with noncentrality delta' sandwich^-1 delta.
double one_sample_local_power(const ModelSpec& model, std::span<const double> theta0,
                              std::span<const double> h, double alpha,
                              std::size_t mc_size, Rng& rng);

// Two-sample version against locations theta0 + h1/sqrt(n1) and
// theta0 + h2/sqrt(n2) with n1/n -> lambda. The drift of
// sqrt(n)(median1 - median2) is
//   delta2 = lambda^-1/2 delta(model1, h1) - (1-lambda)^-1/2 delta(model2, h2)
// and the limiting covariance is
//   lambda^-1 sandwich1 + (1-lambda)^-1 sandwich2.
// (The relative minus sign makes matched shifts h2 = h1 sqrt((1-lambda)/lambda)
// — i.e. equal population locations — give power exactly alpha.)
double two_sample_local_power(const ModelSpec& model1, const ModelSpec& model2,
                              std::span<const double> theta0, std::span<const double> h1,
                              std::span<const double> h2, double lambda, double alpha,
                              std::size_t mc_size, Rng& rng);

}  // namespace loctest

#endif  // LOCTEST_ASYMPTOTICS_HPP
