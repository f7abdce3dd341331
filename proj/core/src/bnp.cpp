#include "loctest/bnp.hpp"

#include <cmath>
#include <stdexcept>

#include "loctest/errors.hpp"
#include "loctest/numerics.hpp"

namespace loctest {

namespace {

Vector column_means(const Matrix& m) {
  Vector mean(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto row = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) mean[j] += row[j];
  }
  for (double& v : mean) v /= static_cast<double>(m.rows());
  return mean;
}

SymMatrix centered_scatter(const Matrix& m, const Vector& center) {
  const std::size_t k = m.cols();
  SymMatrix s(k);
  Vector diff(k);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto row = m.row(i);
    for (std::size_t j = 0; j < k; ++j) diff[j] = row[j] - center[j];
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b <= a; ++b) s.add(a, b, diff[a] * diff[b]);
  }
  s *= 1.0 / static_cast<double>(m.rows());
  return s;
}

CredibleRegion finish_region(Vector center, SymMatrix scatter, const Matrix& diffs,
                             double level, double ridge) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("credible region level must be in (0, 1)");
  CredibleRegion region;
  region.center = std::move(center);
  region.scatter = std::move(scatter);
  region.level = level;
  region.num_draws = diffs.rows();
  region.ridge = ridge;
  try {
    region.scatter_inv = sym_inverse(region.scatter, ridge);
  } catch (const singular_matrix_error&) {
    throw singular_matrix_error(
        "credible-region scatter is numerically singular; pass a positive ridge");
  }

  const std::size_t k = diffs.cols();
  Vector d(diffs.rows()), delta(k);
  for (std::size_t b = 0; b < diffs.rows(); ++b) {
    const auto row = diffs.row(b);
    for (std::size_t j = 0; j < k; ++j) delta[j] = row[j] - region.center[j];
    d[b] = quad_form(region.scatter_inv, delta);
  }
  region.radius_sq = empirical_quantile(d, level);
  return region;
}

}  // namespace

CredibleRegion credible_region(const Matrix& draws, double level, double ridge) {
  const std::size_t k = draws.cols();
  if (draws.rows() <= k)
    throw std::invalid_argument("credible_region: need more draws than dimensions");
  Vector center = column_means(draws);
  SymMatrix scatter = centered_scatter(draws, center);
  return finish_region(std::move(center), std::move(scatter), draws, level, ridge);
}

CredibleRegion difference_region(const Matrix& draws1, const Matrix& draws2, double level,
                                 double ridge) {
  if (draws1.rows() != draws2.rows() || draws1.cols() != draws2.cols())
    throw std::invalid_argument("difference_region: draw sets must have equal shape");
  const std::size_t k = draws1.cols();
  if (draws1.rows() <= k)
    throw std::invalid_argument("difference_region: need more draws than dimensions");

  const Vector mean1 = column_means(draws1), mean2 = column_means(draws2);
  SymMatrix scatter = centered_scatter(draws1, mean1);
  scatter += centered_scatter(draws2, mean2);

  Vector center(k);
  for (std::size_t j = 0; j < k; ++j) center[j] = mean1[j] - mean2[j];

  Matrix diffs(draws1.rows(), k);
  for (std::size_t b = 0; b < draws1.rows(); ++b)
    for (std::size_t j = 0; j < k; ++j) diffs(b, j) = draws1(b, j) - draws2(b, j);

  return finish_region(std::move(center), std::move(scatter), diffs, level, ridge);
}

double mahalanobis_sq(const CredibleRegion& region, std::span<const double> point) {
  if (point.size() != region.center.size())
    throw std::invalid_argument("mahalanobis_sq: dimension mismatch");
  Vector delta(point.size());
  for (std::size_t j = 0; j < point.size(); ++j) delta[j] = point[j] - region.center[j];
  return quad_form(region.scatter_inv, delta);
}

bool contains(const CredibleRegion& region, std::span<const double> point) {
  return mahalanobis_sq(region, point) <= region.radius_sq;
}

Matrix posterior_median_draws(const Sample& data, const PosteriorChoice& prior, std::size_t B,
                              std::uint64_t seed, std::size_t truncation,
                              const MedianOptions& opts) {
  const std::size_t k = data.cols();
  Matrix draws(B, k);
  for (std::size_t b = 0; b < B; ++b) {
    Rng rng(derive_seed(seed, b));
    const Vector theta = std::visit(
        [&](const auto& p) -> Vector {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, BootstrapPosterior>)
            return draw_bootstrap_median(data, rng, opts);
          else
            return draw_posterior_median(data, p, truncation, rng, opts);
        },
        prior);
    std::copy(theta.begin(), theta.end(), draws.row(b).begin());
  }
  return draws;
}

namespace {

// Applies the configured ridge, or the automatic fallback: try exact
// inversion first and ridge by 1e-10 * trace/k (floored at 1e-10 for an
// all-identical degenerate scatter) only if it is singular.
template <typename BuildRegion>
CredibleRegion region_with_ridge_policy(const BuildRegion& build, double ridge,
                                        bool* ridged) {
  *ridged = false;
  if (ridge >= 0.0) return build(ridge);
  try {
    return build(0.0);
  } catch (const singular_matrix_error&) {
    *ridged = true;
    CredibleRegion probe = build(-1.0);  // sentinel handled by caller lambda
    return probe;
  }
}

void region_diagnostics(const CredibleRegion& region, TestOutcome& outcome) {
  const std::size_t k = region.center.size();
  for (std::size_t j = 0; j < k; ++j)
    outcome.diagnostics["center." + std::to_string(j)] = region.center[j];
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a; b < k; ++b)
      outcome.diagnostics["scatter." + std::to_string(a) + "." + std::to_string(b)] =
          region.scatter(a, b);
  outcome.diagnostics["radius_sq"] = region.radius_sq;
  outcome.diagnostics["ridge"] = region.ridge;
  outcome.diagnostics["num_draws"] = static_cast<double>(region.num_draws);
}

}  // namespace

TestOutcome one_sample_test(const Sample& data, std::span<const double> theta0,
                            const PosteriorChoice& prior, const TestOptions& opts,
                            std::uint64_t seed) {
  const std::size_t k = data.cols();
  if (theta0.size() != k) throw std::invalid_argument("one_sample_test: theta0 dimension mismatch");
  if (data.rows() < k + 1) throw std::invalid_argument("one_sample_test: need n >= k + 1");
  if (opts.num_draws <= k) throw std::invalid_argument("one_sample_test: need B > k draws");

  const Matrix draws =
      posterior_median_draws(data, prior, opts.num_draws, seed, opts.truncation, opts.median);

  bool ridged = false;
  const auto build = [&](double ridge) {
    if (ridge < 0.0) {  // automatic fallback
      const double tr = centered_scatter(draws, column_means(draws)).trace();
      ridge = tr > 0.0 ? 1e-10 * tr / static_cast<double>(k) : 1e-10;
    }
    return credible_region(draws, opts.level, ridge);
  };
  const CredibleRegion region = region_with_ridge_policy(build, opts.ridge, &ridged);

  TestOutcome outcome;
  outcome.method = "npbayes";
  outcome.statistic = mahalanobis_sq(region, theta0);
  outcome.threshold = region.radius_sq;
  outcome.reject = outcome.statistic > outcome.threshold;
  region_diagnostics(region, outcome);
  if (ridged) outcome.diagnostics["ridge_applied"] = 1.0;
  return outcome;
}

TestOutcome two_sample_test(const Sample& data1, const Sample& data2,
                            const PosteriorChoice& prior, const TestOptions& opts,
                            std::uint64_t seed) {
  const std::size_t k = data1.cols();
  if (data2.cols() != k) throw std::invalid_argument("two_sample_test: dimension mismatch");
  if (data1.rows() < k + 1 || data2.rows() < k + 1)
    throw std::invalid_argument("two_sample_test: need n >= k + 1 in both samples");
  if (opts.num_draws <= k) throw std::invalid_argument("two_sample_test: need B > k draws");

  const Matrix draws1 = posterior_median_draws(data1, prior, opts.num_draws,
                                               derive_seed(seed, 1), opts.truncation, opts.median);
  const Matrix draws2 = posterior_median_draws(data2, prior, opts.num_draws,
                                               derive_seed(seed, 2), opts.truncation, opts.median);

  bool ridged = false;
  const auto build = [&](double ridge) {
    if (ridge < 0.0) {
      const Vector m1 = column_means(draws1), m2 = column_means(draws2);
      SymMatrix s = centered_scatter(draws1, m1);
      s += centered_scatter(draws2, m2);
      const double tr = s.trace();
      ridge = tr > 0.0 ? 1e-10 * tr / static_cast<double>(k) : 1e-10;
    }
    return difference_region(draws1, draws2, opts.level, ridge);
  };
  const CredibleRegion region = region_with_ridge_policy(build, opts.ridge, &ridged);

  const Vector origin(k, 0.0);
  TestOutcome outcome;
  outcome.method = "npbayes";
  outcome.statistic = mahalanobis_sq(region, origin);
  outcome.threshold = region.radius_sq;
  outcome.reject = outcome.statistic > outcome.threshold;
  region_diagnostics(region, outcome);
  if (ridged) outcome.diagnostics["ridge_applied"] = 1.0;
  return outcome;
}

}  // namespace loctest
