#include "loctest/dp.hpp"

#include <cmath>
#include <stdexcept>

#include "loctest/errors.hpp"

namespace loctest {

namespace {

constexpr double kLogTailInverse = 9.210340371976184;  // ln(1e4)

void check_prior(const DPPrior& prior) {
  if (!(prior.mass > 0.0)) throw std::invalid_argument("DP prior mass must be positive");
}

// One base-measure draw into `out`; `factor` is the precomputed symmetric
// square root of the Gaussian covariance.
void draw_base(const GaussianBase& base, const Matrix& factor, Rng& rng,
               std::span<double> out) {
  const std::size_t k = base.mean.size();
  Vector z(k);
  for (std::size_t d = 0; d < k; ++d) z[d] = rng.normal();
  for (std::size_t i = 0; i < k; ++i) {
    double v = base.mean[i];
    for (std::size_t d = 0; d < k; ++d) v += factor(i, d) * z[d];
    out[i] = v;
  }
}

Matrix base_factor(const BaseMeasure& base) {
  const auto& g = std::get<GaussianBase>(base);
  if (g.covariance.dim() != g.mean.size())
    throw std::invalid_argument("base measure mean/covariance dimension mismatch");
  const SymMatrix root = sym_sqrt(g.covariance);
  Matrix f(root.dim(), root.dim());
  for (std::size_t i = 0; i < root.dim(); ++i)
    for (std::size_t j = 0; j < root.dim(); ++j) f(i, j) = root(i, j);
  return f;
}

}  // namespace

std::size_t auto_truncation(double mass, std::size_t n) {
  const double c = mass + static_cast<double>(n) + 1.0;
  return static_cast<std::size_t>(std::ceil(c * kLogTailInverse));
}

Vector stick_break_weights(std::size_t count, double concentration, Rng& rng) {
  if (count == 0) throw std::invalid_argument("stick_break_weights: count must be positive");
  Vector w(count);
  double used = 0.0, remaining = 1.0;
  for (std::size_t j = 0; j + 1 < count; ++j) {
    const double v = rng.beta_one(concentration);
    w[j] = v * remaining;
    remaining *= 1.0 - v;
    used += w[j];
  }
  w[count - 1] = std::max(0.0, 1.0 - used);  // V_count = 1 takes the leftover stick
  return w;
}

Matrix draw_posterior_atoms(std::size_t count, const Sample& data, const DPPrior& prior,
                            Rng& rng) {
  if (data.rows() == 0) throw std::invalid_argument("draw_posterior_atoms: empty data");
  check_prior(prior);
  const std::size_t n = data.rows(), k = data.cols();
  const double p_base = prior.mass / (prior.mass + static_cast<double>(n));
  const Matrix factor = base_factor(prior.base);
  const auto& g = std::get<GaussianBase>(prior.base);
  if (g.mean.size() != k)
    throw std::invalid_argument("draw_posterior_atoms: base measure dimension mismatch");

  Matrix atoms(count, k);
  for (std::size_t j = 0; j < count; ++j) {
    if (rng.uniform() < p_base) {
      draw_base(g, factor, rng, atoms.row(j));
    } else {
      const auto row = data.row(rng.index(n));
      std::copy(row.begin(), row.end(), atoms.row(j).begin());
    }
  }
  return atoms;
}

Vector draw_posterior_median(const Sample& data, const DPPrior& prior, std::size_t truncation,
                             Rng& rng, const MedianOptions& opts) {
  const std::size_t n = data.rows(), k = data.cols();
  if (n == 0) throw std::invalid_argument("draw_posterior_median: empty data");
  if (n < k + 1) throw std::invalid_argument("draw_posterior_median: need n >= k + 1");
  check_prior(prior);

  const std::size_t count = truncation > 0 ? truncation : auto_truncation(prior.mass, n);
  const Vector w = stick_break_weights(count, prior.mass + static_cast<double>(n), rng);

  // Same draw protocol as draw_posterior_atoms, but data-row atoms are
  // accumulated by index instead of materialized, so repeated rows collapse
  // into one weighted point.
  const double p_base = prior.mass / (prior.mass + static_cast<double>(n));
  const Matrix factor = base_factor(prior.base);
  const auto& g = std::get<GaussianBase>(prior.base);
  if (g.mean.size() != k)
    throw std::invalid_argument("draw_posterior_median: base measure dimension mismatch");

  Vector row_weight(n, 0.0);
  Matrix base_atoms(count, k);  // upper bound; only the first n_base rows used
  Vector base_weights;
  std::size_t n_base = 0;
  for (std::size_t j = 0; j < count; ++j) {
    if (rng.uniform() < p_base) {
      draw_base(g, factor, rng, base_atoms.row(n_base));
      base_weights.push_back(w[j]);
      ++n_base;
    } else {
      row_weight[rng.index(n)] += w[j];
    }
  }

  WeightedPointSet ps;
  std::size_t used_rows = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (row_weight[i] > 0.0) ++used_rows;
  ps.points = Matrix(used_rows + n_base, k);
  ps.weights.resize(used_rows + n_base);
  std::size_t at = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (row_weight[i] == 0.0) continue;
    std::copy(data.row(i).begin(), data.row(i).end(), ps.points.row(at).begin());
    ps.weights[at++] = row_weight[i];
  }
  for (std::size_t b = 0; b < n_base; ++b) {
    std::copy(base_atoms.row(b).begin(), base_atoms.row(b).end(), ps.points.row(at).begin());
    ps.weights[at++] = base_weights[b];
  }
  double wsum = 0.0;
  for (double v : ps.weights) wsum += v;
  for (double& v : ps.weights) v /= wsum;
  snap_weight_sum(ps.weights);

  const MedianSolution sol = weighted_spatial_median(ps, opts);
  if (!sol.converged)
    throw convergence_error("posterior median solve did not converge in " +
                            std::to_string(sol.iterations) + " iterations");
  return sol.location;
}

Vector bayesian_bootstrap_weights(std::size_t n, Rng& rng) {
  if (n == 0) throw std::invalid_argument("bayesian_bootstrap_weights: n must be positive");
  Vector w(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = rng.exponential();
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  snap_weight_sum(w);
  return w;
}

Vector draw_bootstrap_median(const Sample& data, Rng& rng, const MedianOptions& opts) {
  const std::size_t n = data.rows(), k = data.cols();
  if (n < k + 1) throw std::invalid_argument("draw_bootstrap_median: need n >= k + 1");
  WeightedPointSet ps;
  ps.points = data;
  ps.weights = bayesian_bootstrap_weights(n, rng);
  const MedianSolution sol = weighted_spatial_median(ps, opts);
  if (!sol.converged)
    throw convergence_error("bootstrap median solve did not converge in " +
                            std::to_string(sol.iterations) + " iterations");
  return sol.location;
}

}  // namespace loctest
