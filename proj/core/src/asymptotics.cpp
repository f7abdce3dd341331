#include "loctest/asymptotics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "loctest/errors.hpp"
#include "loctest/numerics.hpp"

namespace loctest {

namespace {

constexpr double kDegenerateRadius = 1e-12;

void check_theta(const ModelSpec& model, std::span<const double> theta) {
  if (model.dim == 0 || !model.sampler)
    throw std::invalid_argument("asymptotics: model has no sampler");
  if (theta.size() != model.dim)
    throw std::invalid_argument("asymptotics: theta dimension mismatch");
}

// Shared single-pass accumulator over draws or sample rows.
struct Accumulator {
  std::size_t k;
  SymMatrix u_sum;
  SymMatrix v_sum;
  Vector drift_sum;  // used only when a drift weight is supplied
  std::size_t kept = 0;
  std::size_t skipped = 0;

  explicit Accumulator(std::size_t dim)
      : k(dim), u_sum(dim), v_sum(dim), drift_sum(dim, 0.0) {}

  // weight: the scalar score(y)' fisher^-1 h, or 0 when no drift is wanted.
  void add(std::span<const double> y, std::span<const double> theta, double weight) {
    double norm_sq = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
      const double d = y[a] - theta[a];
      norm_sq += d * d;
    }
    const double norm = std::sqrt(norm_sq);
    if (norm <= kDegenerateRadius) {
      ++skipped;
      return;
    }
    ++kept;
    for (std::size_t a = 0; a < k; ++a) {
      const double ua = (y[a] - theta[a]) / norm;
      drift_sum[a] -= ua * weight;
      for (std::size_t b = 0; b <= a; ++b) {
        const double ub = (y[b] - theta[b]) / norm;
        u_sum.add(a, b, ua * ub);
        v_sum.add(a, b, ((a == b ? 1.0 : 0.0) - ua * ub) / norm);
      }
    }
  }

  void finish() {
    if (kept == 0)
      throw std::domain_error("estimate_sandwich: every observation coincides with theta");
    const double inv = 1.0 / static_cast<double>(kept);
    u_sum *= inv;
    v_sum *= inv;
    for (double& v : drift_sum) v *= inv;
  }
};

SandwichPair to_pair(Accumulator&& acc, std::span<const double> theta) {
  acc.finish();
  SandwichPair out;
  out.u_mat = std::move(acc.u_sum);
  out.v_mat = std::move(acc.v_sum);
  out.mc_size = acc.kept;
  out.theta.assign(theta.begin(), theta.end());
  out.skipped = acc.skipped;
  return out;
}

SymMatrix sandwich_of(const SymMatrix& u_mat, const SymMatrix& v_mat) {
  const std::size_t k = u_mat.dim();
  const SymMatrix v_inv = sym_inverse(v_mat);
  // v_inv * u * v_inv, symmetrized against rounding.
  Matrix tmp(k, k);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) {
      double s = 0.0;
      for (std::size_t c = 0; c < k; ++c) s += v_inv(a, c) * u_mat(c, b);
      tmp(a, b) = s;
    }
  SymMatrix out(k);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b <= a; ++b) {
      double s = 0.0;
      for (std::size_t c = 0; c < k; ++c) s += tmp(a, c) * v_inv(c, b);
      out.set(a, b, s);
    }
  return out;
}

}  // namespace

ModelSpec gaussian_model(const SymMatrix& sigma) {
  const std::size_t k = sigma.dim();
  const Matrix factor = [&] {
    const SymMatrix root = sym_sqrt(sigma);
    Matrix f(k, k);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b) f(a, b) = root(a, b);
    return f;
  }();
  const SymMatrix info = sym_inverse(sigma);

  ModelSpec model;
  model.dim = k;
  model.sampler = [k, factor](std::span<const double> theta, Rng& rng,
                              std::span<double> out) {
    Vector z(k);
    for (double& v : z) v = rng.normal();
    for (std::size_t a = 0; a < k; ++a) {
      double s = theta[a];
      for (std::size_t b = 0; b < k; ++b) s += factor(a, b) * z[b];
      out[a] = s;
    }
  };
  model.score = [k, info](std::span<const double> theta, std::span<const double> y,
                          std::span<double> out) {
    for (std::size_t a = 0; a < k; ++a) {
      double s = 0.0;
      for (std::size_t b = 0; b < k; ++b) s += info(a, b) * (y[b] - theta[b]);
      out[a] = s;
    }
  };
  model.fisher = [info](std::span<const double>) { return info; };
  return model;
}

ModelSpec t_model(const SymMatrix& sigma, double nu) {
  if (!(nu >= 1.0)) throw std::invalid_argument("t_model: need nu >= 1");
  const std::size_t k = sigma.dim();
  const Matrix factor = [&] {
    const SymMatrix root = sym_sqrt(sigma);
    Matrix f(k, k);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b) f(a, b) = root(a, b);
    return f;
  }();
  const SymMatrix inv_sigma = sym_inverse(sigma);

  ModelSpec model;
  model.dim = k;
  model.sampler = [k, factor, nu](std::span<const double> theta, Rng& rng,
                                  std::span<double> out) {
    Vector z(k);
    for (double& v : z) v = rng.normal();
    const double w = rng.chi_square(nu);
    const double scale = std::sqrt(nu / w);
    for (std::size_t a = 0; a < k; ++a) {
      double s = 0.0;
      for (std::size_t b = 0; b < k; ++b) s += factor(a, b) * z[b];
      out[a] = theta[a] + scale * s;
    }
  };
  model.score = [k, inv_sigma, nu](std::span<const double> theta,
                                   std::span<const double> y, std::span<double> out) {
    Vector d(k);
    for (std::size_t a = 0; a < k; ++a) d[a] = y[a] - theta[a];
    const double q = quad_form(inv_sigma, d);
    const double scale = (nu + static_cast<double>(k)) / (nu + q);
    for (std::size_t a = 0; a < k; ++a) {
      double s = 0.0;
      for (std::size_t b = 0; b < k; ++b) s += inv_sigma(a, b) * d[b];
      out[a] = scale * s;
    }
  };
  model.fisher = [inv_sigma, nu, k](std::span<const double>) {
    SymMatrix info = inv_sigma;
    const double dk = static_cast<double>(k);
    info *= (nu + dk) / (nu + dk + 2.0);
    return info;
  };
  return model;
}

SandwichPair estimate_sandwich(const ModelSpec& model, std::span<const double> theta,
                               std::size_t mc_size, Rng& rng) {
  check_theta(model, theta);
  if (mc_size < 1000)
    throw std::invalid_argument("estimate_sandwich: need mc_size >= 1000");
  const std::size_t k = model.dim;
  Accumulator acc(k);
  Vector y(k);
  for (std::size_t i = 0; i < mc_size; ++i) {
    model.sampler(theta, rng, y);
    acc.add(y, theta, 0.0);
  }
  return to_pair(std::move(acc), theta);
}

SandwichPair estimate_sandwich(const Sample& data, std::span<const double> theta) {
  const std::size_t n = data.rows(), k = data.cols();
  if (theta.size() != k)
    throw std::invalid_argument("estimate_sandwich: theta dimension mismatch");
  if (n <= k) throw std::invalid_argument("estimate_sandwich: need n > k");
  Accumulator acc(k);
  for (std::size_t i = 0; i < n; ++i) acc.add(data.row(i), theta, 0.0);
  return to_pair(std::move(acc), theta);
}

DriftEstimate estimate_drift(const ModelSpec& model, std::span<const double> theta0,
                             std::span<const double> h, std::size_t mc_size, Rng& rng) {
  check_theta(model, theta0);
  if (!model.score || !model.fisher)
    throw std::invalid_argument("estimate_drift: model needs score and fisher");
  if (h.size() != model.dim) throw std::invalid_argument("estimate_drift: h dimension mismatch");
  if (mc_size < 1000) throw std::invalid_argument("estimate_drift: need mc_size >= 1000");
  const std::size_t k = model.dim;

  SymMatrix info_inv;
  try {
    info_inv = sym_inverse(model.fisher(theta0));
  } catch (const singular_matrix_error&) {
    throw singular_matrix_error("estimate_drift: singular Fisher information");
  }
  Vector g(k, 0.0);  // fisher^-1 h
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) g[a] += info_inv(a, b) * h[b];

  Accumulator acc(k);
  Vector y(k), s(k);
  for (std::size_t i = 0; i < mc_size; ++i) {
    model.sampler(theta0, rng, y);
    model.score(theta0, y, s);
    double weight = 0.0;
    for (std::size_t a = 0; a < k; ++a) weight += s[a] * g[a];
    acc.add(y, theta0, weight);
  }
  acc.finish();

  SymMatrix v_inv;
  try {
    v_inv = sym_inverse(acc.v_sum);
  } catch (const singular_matrix_error&) {
    throw singular_matrix_error("estimate_drift: singular V matrix");
  }

  DriftEstimate out;
  out.delta = mat_vec(v_inv, acc.drift_sum);
  out.sandwich = sandwich_of(acc.u_sum, acc.v_sum);
  out.mc_size = acc.kept;
  out.skipped = acc.skipped;
  return out;
}

double one_sample_local_power(const ModelSpec& model, std::span<const double> theta0,
                              std::span<const double> h, double alpha,
                              std::size_t mc_size, Rng& rng) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("one_sample_local_power: alpha must lie in (0,1)");
  const DriftEstimate drift = estimate_drift(model, theta0, h, mc_size, rng);
  const double ncp = quad_form(sym_inverse(drift.sandwich), drift.delta);
  const double k = static_cast<double>(model.dim);
  const double crit = chi2_quantile(k, alpha);
  return 1.0 - noncentral_chi2_cdf(crit, k, ncp);
}

double two_sample_local_power(const ModelSpec& model1, const ModelSpec& model2,
                              std::span<const double> theta0, std::span<const double> h1,
                              std::span<const double> h2, double lambda, double alpha,
                              std::size_t mc_size, Rng& rng) {
  if (!(lambda > 0.0 && lambda < 1.0))
    throw std::invalid_argument("two_sample_local_power: lambda must lie in (0,1)");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("two_sample_local_power: alpha must lie in (0,1)");
  if (model1.dim != model2.dim)
    throw std::invalid_argument("two_sample_local_power: model dimension mismatch");

  const DriftEstimate d1 = estimate_drift(model1, theta0, h1, mc_size, rng);
  const DriftEstimate d2 = estimate_drift(model2, theta0, h2, mc_size, rng);

  const std::size_t k = model1.dim;
  const double w1 = 1.0 / std::sqrt(lambda), w2 = 1.0 / std::sqrt(1.0 - lambda);
  Vector delta(k);
  for (std::size_t a = 0; a < k; ++a) delta[a] = w1 * d1.delta[a] - w2 * d2.delta[a];

  SymMatrix mixed = d1.sandwich;
  mixed *= w1 * w1;
  SymMatrix second = d2.sandwich;
  second *= w2 * w2;
  mixed += second;

  const double ncp = quad_form(sym_inverse(mixed), delta);
  const double dk = static_cast<double>(k);
  const double crit = chi2_quantile(dk, alpha);
  return 1.0 - noncentral_chi2_cdf(crit, dk, ncp);
}

}  // namespace loctest
