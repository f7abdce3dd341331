#ifndef LOCTEST_BNP_HPP
#define LOCTEST_BNP_HPP

#include <cstddef>
#include <cstdint>
#include <variant>

#include "loctest/dp.hpp"
#include "loctest/matrix.hpp"
#include "loctest/outcome.hpp"
#include "loctest/spatial.hpp"
#include "loctest/sym_matrix.hpp"

namespace loctest {

/// Posterior ellipsoid { x : (x - center)' scatter^-1 (x - center) <= radius_sq }.
struct CredibleRegion {
  Vector center;
  SymMatrix scatter;       // mean outer product of centered draws (no ridge)
  double radius_sq = 0.0;  // order-statistic quantile of per-draw Mahalanobis^2
  double level = 0.0;
  std::size_t num_draws = 0;
  SymMatrix scatter_inv;   // inverse of scatter + ridge I, shared by all queries
  double ridge = 0.0;      // ridge actually applied
};

/// Noninformative prior choice: Bayesian bootstrap instead of a full DP.
struct BootstrapPosterior {};
using PosteriorChoice = std::variant<BootstrapPosterior, DPPrior>;

struct TestOptions {
  std::size_t num_draws = 1000;  // B
  double level = 0.95;
  std::size_t truncation = 0;  // stick-breaking atoms; 0 = automatic
  MedianOptions median;
  // Ridge added to the scatter before inversion. Negative means automatic:
  // try 0 and fall back to 1e-10 * trace/k if the scatter is singular.
  double ridge = -1.0;
};

/// Center, scatter and squared radius from B posterior draws (rows).
CredibleRegion credible_region(const Matrix& draws, double level, double ridge = 0.0);

/// Region for the difference of two paired draw sets: center of first minus
/// second, scatter S1 + S2, radius from per-draw difference distances.
CredibleRegion difference_region(const Matrix& draws1, const Matrix& draws2, double level,
                                 double ridge = 0.0);

double mahalanobis_sq(const CredibleRegion& region, std::span<const double> point);
bool contains(const CredibleRegion& region, std::span<const double> point);

/// B posterior (or bootstrap) spatial-median draws, one per row. Draw b uses
/// the substream derived from (seed, b), so results do not depend on
/// evaluation order.
Matrix posterior_median_draws(const Sample& data, const PosteriorChoice& prior, std::size_t B,
                              std::uint64_t seed, std::size_t truncation = 0,
                              const MedianOptions& opts = {});

/// One-sample location test: reject when theta0 falls outside the credible
/// region of the posterior median draws.
TestOutcome one_sample_test(const Sample& data, std::span<const double> theta0,
                            const PosteriorChoice& prior, const TestOptions& opts,
                            std::uint64_t seed);

/// Two-sample test for equality of the two spatial medians: reject when 0
/// falls outside the credible region of the paired draw differences. The two
/// samples use independent substreams of `seed`.
TestOutcome two_sample_test(const Sample& data1, const Sample& data2,
                            const PosteriorChoice& prior, const TestOptions& opts,
                            std::uint64_t seed);

}  // namespace loctest

#endif
