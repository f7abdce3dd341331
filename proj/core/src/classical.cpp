#include "loctest/classical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "loctest/errors.hpp"
#include "loctest/numerics.hpp"
#include "loctest/spatial.hpp"
#include "loctest/sym_matrix.hpp"

namespace loctest {

namespace {

Matrix small_inverse(const Matrix& a) {
  const std::size_t k = a.rows();
  Matrix work = a, inv(k, k);
  for (std::size_t i = 0; i < k; ++i) inv(i, i) = 1.0;
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < k; ++r)
      if (std::abs(work(r, col)) > std::abs(work(pivot, col))) pivot = r;
    if (work(pivot, col) == 0.0)
      throw singular_matrix_error("small_inverse: singular matrix");
    if (pivot != col)
      for (std::size_t c = 0; c < k; ++c) {
        std::swap(work(pivot, c), work(col, c));
        std::swap(inv(pivot, c), inv(col, c));
      }
    const double d = work(col, col);
    for (std::size_t c = 0; c < k; ++c) {
      work(col, c) /= d;
      inv(col, c) /= d;
    }
    for (std::size_t r = 0; r < k; ++r) {
      if (r == col || work(r, col) == 0.0) continue;
      const double f = work(r, col);
      for (std::size_t c = 0; c < k; ++c) {
        work(r, c) -= f * work(col, c);
        inv(r, c) -= f * inv(col, c);
      }
    }
  }
  return inv;
}

double small_det(const Matrix& a) {
  const std::size_t k = a.rows();
  Matrix work = a;
  double det = 1.0;
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < k; ++r)
      if (std::abs(work(r, col)) > std::abs(work(pivot, col))) pivot = r;
    if (work(pivot, col) == 0.0) return 0.0;
    if (pivot != col) {
      det = -det;
      for (std::size_t c = 0; c < k; ++c) std::swap(work(pivot, c), work(col, c));
    }
    det *= work(col, col);
    for (std::size_t r = col + 1; r < k; ++r) {
      const double f = work(r, col) / work(col, col);
      for (std::size_t c = col; c < k; ++c) work(r, c) -= f * work(col, c);
    }
  }
  return det;
}

Matrix pooled_rows(const Sample& data1, const Sample& data2) {
  Matrix pooled(data1.rows() + data2.rows(), data1.cols());
  for (std::size_t i = 0; i < data1.rows(); ++i)
    std::copy(data1.row(i).begin(), data1.row(i).end(), pooled.row(i).begin());
  for (std::size_t i = 0; i < data2.rows(); ++i)
    std::copy(data2.row(i).begin(), data2.row(i).end(),
              pooled.row(data1.rows() + i).begin());
  return pooled;
}

// Z_i = H (Y_i - h)
Matrix transform_rows(const Matrix& rows, const Matrix& transform, const Vector& shift) {
  const std::size_t n = rows.rows(), k = rows.cols();
  Matrix z(n, k);
  Vector d(k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = rows.row(i);
    for (std::size_t j = 0; j < k; ++j) d[j] = row[j] - shift[j];
    for (std::size_t a = 0; a < k; ++a) {
      double v = 0.0;
      for (std::size_t b = 0; b < k; ++b) v += transform(a, b) * d[b];
      z(i, a) = v;
    }
  }
  return z;
}

// Pooled scores: spatial signs, or spatial ranks against the pooled set.
Matrix pooled_scores(const Matrix& z, ScoreKind kind) {
  const std::size_t n = z.rows(), k = z.cols();
  Matrix t(n, k);
  if (kind == ScoreKind::sign) {
    for (std::size_t i = 0; i < n; ++i) spatial_sign(z.row(i), t.row(i));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const Vector r = spatial_rank(z.row(i), z);
      std::copy(r.begin(), r.end(), t.row(i).begin());
    }
  }
  return t;
}

double binomial_count(std::size_t n, std::size_t r) {
  double c = 1.0;
  for (std::size_t i = 0; i < r; ++i) c = c * static_cast<double>(n - i) / (i + 1.0);
  return c;
}

// Comparison slack so the identity resample always counts as >= observed.
double tie_eps(double observed) { return 1e-12 * (1.0 + std::abs(observed)); }

}  // namespace

ScoreStatistic score_statistic(const Sample& data, std::span<const double> theta0,
                               ScoreKind kind) {
  const std::size_t n = data.rows(), k = data.cols();
  if (theta0.size() != k) throw std::invalid_argument("score_statistic: theta0 dimension mismatch");
  if (n <= k) throw std::invalid_argument("score_statistic: need n > k");
  if (kind == ScoreKind::rank)
    throw std::invalid_argument(
        "score_statistic: rank scores are two-sample only (their one-sample mean is identically "
        "zero); use sign or signed_rank");

  Matrix centered(n, k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) centered(i, j) = data(i, j) - theta0[j];

  ScoreStatistic out;
  out.scores = Matrix(n, k);
  if (kind == ScoreKind::sign) {
    for (std::size_t i = 0; i < n; ++i) spatial_sign(centered.row(i), out.scores.row(i));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const Vector q = spatial_signed_rank(centered.row(i), centered);
      std::copy(q.begin(), q.end(), out.scores.row(i).begin());
    }
  }

  SymMatrix s(k);
  Vector mean(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = out.scores.row(i);
    for (std::size_t a = 0; a < k; ++a) {
      mean[a] += row[a];
      for (std::size_t b = 0; b <= a; ++b) s.add(a, b, row[a] * row[b]);
    }
  }
  s *= 1.0 / static_cast<double>(n);
  for (double& v : mean) v /= static_cast<double>(n);

  SymMatrix w;
  try {
    w = sym_inverse(s);
  } catch (const singular_matrix_error&) {
    throw singular_matrix_error("score_statistic: degenerate score scatter (collinear data)");
  }
  out.q_sq = static_cast<double>(n) * quad_form(w, mean);
  return out;
}

double chi2_pvalue(double q_sq, std::size_t k) {
  if (q_sq < 0.0) throw std::invalid_argument("chi2_pvalue: negative statistic");
  return 1.0 - chi2_cdf(static_cast<double>(k), q_sq);
}

double sign_flip_pvalue(const Sample& data, std::span<const double> theta0, ScoreKind kind,
                        std::size_t flips, Rng& rng, ResamplingMode mode) {
  if (flips == 0) throw std::invalid_argument("sign_flip_pvalue: need at least one flip");
  const std::size_t n = data.rows(), k = data.cols();

  // Flipping observation i flips score row i for both supported kinds:
  // signs directly, and signed ranks because {-Y_j, +Y_j} is flip-invariant
  // as a set. The score scatter is flip-invariant too, so resampling only
  // re-signs precomputed rows.
  const ScoreStatistic ss = score_statistic(data, theta0, kind);

  SymMatrix s(k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = ss.scores.row(i);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b <= a; ++b) s.add(a, b, row[a] * row[b]);
  }
  s *= 1.0 / static_cast<double>(n);
  const SymMatrix w = sym_inverse(s);

  Vector m(k);
  const auto q_of = [&](const std::vector<signed char>& delta) {
    std::fill(m.begin(), m.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = ss.scores.row(i);
      if (delta[i] > 0)
        for (std::size_t a = 0; a < k; ++a) m[a] += row[a];
      else
        for (std::size_t a = 0; a < k; ++a) m[a] -= row[a];
    }
    for (double& v : m) v /= static_cast<double>(n);
    return static_cast<double>(n) * quad_form(w, m);
  };

  std::vector<signed char> delta(n, 1);
  const double observed = q_of(delta);
  const double eps = tie_eps(observed);

  const bool exhaustive =
      mode == ResamplingMode::exhaustive ||
      (mode == ResamplingMode::automatic && n <= 12);
  if (exhaustive) {
    if (n > 25)
      throw std::invalid_argument("sign_flip_pvalue: exhaustive enumeration limited to n <= 25");
    const std::uint64_t total = std::uint64_t{1} << n;
    std::uint64_t count = 0;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      for (std::size_t i = 0; i < n; ++i) delta[i] = (mask >> i) & 1 ? -1 : 1;
      if (q_of(delta) >= observed - eps) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(total);
  }

  std::size_t count = 0;
  for (std::size_t f = 0; f < flips; ++f) {
    for (std::size_t i = 0; i < n; ++i) delta[i] = rng.uniform() < 0.5 ? -1 : 1;
    if (q_of(delta) >= observed - eps) ++count;
  }
  return static_cast<double>(count + 1) / static_cast<double>(flips + 1);
}

InnerStandardization inner_standardize_two_sample(const Sample& data1, const Sample& data2,
                                                  ScoreKind kind, double tol,
                                                  std::size_t max_iter) {
  if (kind == ScoreKind::signed_rank)
    throw std::invalid_argument(
        "inner_standardize_two_sample: signed_rank is one-sample only; use sign or rank");
  if (data1.cols() != data2.cols())
    throw std::invalid_argument("inner_standardize_two_sample: dimension mismatch");
  const std::size_t k = data1.cols();
  const std::size_t n = data1.rows() + data2.rows();
  if (n <= k) throw std::invalid_argument("inner_standardize_two_sample: need pooled n > k");

  const Matrix pooled = pooled_rows(data1, data2);

  InnerStandardization result;
  result.transform = Matrix(k, k);
  for (std::size_t i = 0; i < k; ++i) result.transform(i, i) = 1.0;
  result.shift.assign(k, 0.0);

  bool converged = false;
  double prev_res = std::numeric_limits<double>::infinity();
  double damping = 1.0;
  for (std::size_t iter = 1; iter <= max_iter; ++iter) {
    result.iterations = iter;
    const Matrix z = transform_rows(pooled, result.transform, result.shift);
    const Matrix t = pooled_scores(z, kind);

    Vector mean(k, 0.0);
    SymMatrix outer(k);
    double msq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = t.row(i);
      for (std::size_t a = 0; a < k; ++a) {
        mean[a] += row[a];
        msq += row[a] * row[a];
        for (std::size_t b = 0; b <= a; ++b) outer.add(a, b, row[a] * row[b]);
      }
    }
    for (double& v : mean) v /= static_cast<double>(n);
    msq /= static_cast<double>(n);
    if (msq <= 0.0)
      throw singular_matrix_error("inner_standardize_two_sample: degenerate pooled scores");

    SymMatrix scatter_cond = outer;
    scatter_cond *= static_cast<double>(k) / (static_cast<double>(n) * msq);

    double mean_res = 0.0;
    for (double v : mean) mean_res += v * v;
    mean_res = std::sqrt(mean_res);
    double scat_res = 0.0;
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b <= a; ++b)
        scat_res = std::max(std::abs(scatter_cond(a, b) - (a == b ? 1.0 : 0.0)), scat_res);

    // For rank scores the pooled mean vanishes identically (pairwise
    // antisymmetry), so only the sign variant ever updates the shift.
    result.mean_residual = mean_res;
    result.scatter_residual = scat_res;
    if (mean_res <= tol && scat_res <= tol) {
      converged = true;
      break;
    }

    // Small pooled samples can push the full joint update into a limit cycle
    // (the shift and scatter corrections keep overshooting each other), so a
    // pass that failed to shrink the residual halves the step length. Paths
    // that contract monotonically keep the undamped updates.
    const double res = std::max(mean_res, scat_res);
    if (res >= prev_res) damping = std::max(0.5 * damping, 1.0 / 64.0);
    else damping = std::min(1.0, 1.25 * damping);
    prev_res = res;

    if (kind == ScoreKind::sign && mean_res > tol) {
      // Newton step on the sign mean: its derivative in the shift is
      // -(1/n) sum (I - u u')/|Z_i| times H.
      SymMatrix curvature(k);
      double max_radius = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto zi = z.row(i);
        double nz = 0.0;
        for (std::size_t a = 0; a < k; ++a) nz += zi[a] * zi[a];
        nz = std::sqrt(nz);
        if (nz == 0.0) continue;
        max_radius = std::max(max_radius, nz);
        const auto ui = t.row(i);  // sign scores are the unit vectors
        for (std::size_t a = 0; a < k; ++a)
          for (std::size_t b = 0; b <= a; ++b)
            curvature.add(a, b, ((a == b ? 1.0 : 0.0) - ui[a] * ui[b]) / nz);
      }
      curvature *= 1.0 / static_cast<double>(n);
      Vector step_z = mat_vec(sym_inverse(curvature), mean);
      // Clamp runaway steps (in Z coordinates) to the data radius.
      double sn = 0.0;
      for (double v : step_z) sn += v * v;
      sn = std::sqrt(sn);
      if (sn > 2.0 * max_radius && sn > 0.0)
        for (double& v : step_z) v *= 2.0 * max_radius / sn;
      const Matrix hinv = small_inverse(result.transform);
      for (std::size_t a = 0; a < k; ++a) {
        double v = 0.0;
        for (std::size_t b = 0; b < k; ++b) v += hinv(a, b) * step_z[b];
        result.shift[a] += damping * v;
      }
    }

    // Scatter update: H <- C^{-1/2} H, blended toward the identity when the
    // step is damped (a convex blend keeps the factor positive definite).
    const SymMatrix root = sym_inv_sqrt(scatter_cond);
    Matrix next(k, k);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b) {
        double v = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
          const double blended = damping * root(a, c) + (a == c ? 1.0 - damping : 0.0);
          v += blended * result.transform(c, b);
        }
        next(a, b) = v;
      }
    result.transform = next;
  }

  if (!converged)
    throw convergence_error("inner standardization did not converge: mean residual " +
                            std::to_string(result.mean_residual) + ", scatter residual " +
                            std::to_string(result.scatter_residual) + " after " +
                            std::to_string(result.iterations) + " iterations");

  // Scale to unit determinant; both defining conditions are scale-invariant.
  const double det = small_det(result.transform);
  if (!(det > 0.0))
    throw convergence_error("inner standardization produced a non-positive determinant");
  const double factor = std::pow(det, 1.0 / static_cast<double>(k));
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) result.transform(a, b) /= factor;

  result.standardized = transform_rows(pooled, result.transform, result.shift);
  return result;
}

namespace {

struct TwoSampleStat {
  double q_sq;
  Matrix scores;
  double mean_sq;  // (1/n) sum |T_i|^2
};

TwoSampleStat two_sample_statistic(const Matrix& pooled_z, std::size_t n1, ScoreKind kind) {
  const std::size_t n = pooled_z.rows(), k = pooled_z.cols();
  const std::size_t n2 = n - n1;
  TwoSampleStat out;
  out.scores = pooled_scores(pooled_z, kind);

  Vector g1(k, 0.0), g2(k, 0.0);
  double msq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = out.scores.row(i);
    auto& g = i < n1 ? g1 : g2;
    for (std::size_t a = 0; a < k; ++a) {
      g[a] += row[a];
      msq += row[a] * row[a];
    }
  }
  msq /= static_cast<double>(n);
  if (msq <= 0.0)
    throw singular_matrix_error("two-sample statistic: degenerate pooled scores");

  double s1 = 0.0, s2 = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    s1 += g1[a] * g1[a];
    s2 += g2[a] * g2[a];
  }
  s1 /= static_cast<double>(n1) * n1;
  s2 /= static_cast<double>(n2) * n2;
  out.q_sq = static_cast<double>(k) * (n1 * s1 + n2 * s2) / msq;
  out.mean_sq = msq;
  return out;
}

}  // namespace

TestOutcome one_sample_score_test(const Sample& data, std::span<const double> theta0,
                                  ScoreKind kind, double alpha) {
  const ScoreStatistic ss = score_statistic(data, theta0, kind);
  TestOutcome outcome;
  outcome.method = kind == ScoreKind::sign ? "sign" : "signed_rank";
  outcome.statistic = ss.q_sq;
  outcome.threshold = chi2_quantile(static_cast<double>(data.cols()), alpha);
  outcome.p_value = chi2_pvalue(ss.q_sq, data.cols());
  outcome.reject = outcome.statistic > outcome.threshold;
  return outcome;
}

TestOutcome two_sample_score_test(const Sample& data1, const Sample& data2, ScoreKind kind,
                                  bool standardize, double alpha) {
  if (kind == ScoreKind::signed_rank)
    throw std::invalid_argument("two_sample_score_test: signed_rank is one-sample only");
  const std::size_t k = data1.cols();
  if (data1.rows() <= k || data2.rows() <= k)
    throw std::invalid_argument("two_sample_score_test: need n > k in each sample");

  TestOutcome outcome;
  outcome.method = kind == ScoreKind::sign ? "sign" : "rank";

  Matrix z;
  if (standardize) {
    InnerStandardization is = inner_standardize_two_sample(data1, data2, kind);
    z = std::move(is.standardized);
    outcome.diagnostics["standardize_iterations"] = static_cast<double>(is.iterations);
    outcome.diagnostics["mean_residual"] = is.mean_residual;
    outcome.diagnostics["scatter_residual"] = is.scatter_residual;
  } else {
    z = pooled_rows(data1, data2);
  }

  const TwoSampleStat stat = two_sample_statistic(z, data1.rows(), kind);
  outcome.statistic = stat.q_sq;
  outcome.threshold = chi2_quantile(static_cast<double>(k), alpha);
  outcome.p_value = chi2_pvalue(stat.q_sq, k);
  outcome.reject = outcome.statistic > outcome.threshold;
  return outcome;
}

double permutation_pvalue(const Sample& data1, const Sample& data2, ScoreKind kind,
                          std::size_t perms, Rng& rng, ResamplingMode mode) {
  if (perms == 0) throw std::invalid_argument("permutation_pvalue: need at least one permutation");
  const std::size_t n1 = data1.rows(), n2 = data2.rows(), n = n1 + n2;
  const std::size_t k = data1.cols();

  // Standardization depends on the pooled set only, not on the labels, so it
  // is shared by every reassignment.
  const InnerStandardization is = inner_standardize_two_sample(data1, data2, kind);
  const Matrix scores = pooled_scores(is.standardized, kind);

  Vector total(k, 0.0);
  double msq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = scores.row(i);
    for (std::size_t a = 0; a < k; ++a) {
      total[a] += row[a];
      msq += row[a] * row[a];
    }
  }
  msq /= static_cast<double>(n);
  if (msq <= 0.0)
    throw singular_matrix_error("permutation_pvalue: degenerate pooled scores");

  Vector sum1(k);
  const auto q_of_sum1 = [&](const Vector& s1) {
    double a1 = 0.0, a2 = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
      a1 += s1[a] * s1[a];
      const double r = total[a] - s1[a];
      a2 += r * r;
    }
    a1 /= static_cast<double>(n1) * n1;
    a2 /= static_cast<double>(n2) * n2;
    return static_cast<double>(k) * (n1 * a1 + n2 * a2) / msq;
  };

  std::fill(sum1.begin(), sum1.end(), 0.0);
  for (std::size_t i = 0; i < n1; ++i) {
    const auto row = scores.row(i);
    for (std::size_t a = 0; a < k; ++a) sum1[a] += row[a];
  }
  const double observed = q_of_sum1(sum1);
  const double eps = tie_eps(observed);

  const double assignments = binomial_count(n, n1);
  const bool exhaustive =
      mode == ResamplingMode::exhaustive ||
      (mode == ResamplingMode::automatic && assignments <= 4096.0);
  if (exhaustive) {
    if (assignments > 1e6)
      throw std::invalid_argument("permutation_pvalue: too many assignments to enumerate");
    std::vector<std::size_t> pick(n1);
    for (std::size_t i = 0; i < n1; ++i) pick[i] = i;
    std::size_t count = 0, seen = 0;
    for (;;) {
      std::fill(sum1.begin(), sum1.end(), 0.0);
      for (const std::size_t i : pick) {
        const auto row = scores.row(i);
        for (std::size_t a = 0; a < k; ++a) sum1[a] += row[a];
      }
      ++seen;
      if (q_of_sum1(sum1) >= observed - eps) ++count;
      // Advance to the next n1-subset of {0..n-1}.
      std::size_t pos = n1;
      while (pos > 0 && pick[pos - 1] == n - n1 + pos - 1) --pos;
      if (pos == 0) break;
      ++pick[pos - 1];
      for (std::size_t i = pos; i < n1; ++i) pick[i] = pick[i - 1] + 1;
    }
    return static_cast<double>(count) / static_cast<double>(seen);
  }

  std::vector<std::size_t> idx(n);
  std::size_t count = 0;
  for (std::size_t p = 0; p < perms; ++p) {
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::fill(sum1.begin(), sum1.end(), 0.0);
    for (std::size_t i = 0; i < n1; ++i) {
      const std::size_t j = i + rng.index(n - i);
      std::swap(idx[i], idx[j]);
      const auto row = scores.row(idx[i]);
      for (std::size_t a = 0; a < k; ++a) sum1[a] += row[a];
    }
    if (q_of_sum1(sum1) >= observed - eps) ++count;
  }
  return static_cast<double>(count + 1) / static_cast<double>(perms + 1);
}

namespace {

struct MeanCov {
  Vector mean;
  SymMatrix cov;  // 1/n denominator
};

MeanCov mean_and_cov(const Sample& data) {
  const std::size_t n = data.rows(), k = data.cols();
  MeanCov mc;
  mc.mean.assign(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = data.row(i);
    for (std::size_t a = 0; a < k; ++a) mc.mean[a] += row[a];
  }
  for (double& v : mc.mean) v /= static_cast<double>(n);
  mc.cov = SymMatrix(k);
  Vector d(k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = data.row(i);
    for (std::size_t a = 0; a < k; ++a) d[a] = row[a] - mc.mean[a];
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b <= a; ++b) mc.cov.add(a, b, d[a] * d[b]);
  }
  mc.cov *= 1.0 / static_cast<double>(n);
  return mc;
}

TestOutcome chi2_outcome(const char* method, double statistic, std::size_t k, double alpha) {
  TestOutcome outcome;
  outcome.method = method;
  outcome.statistic = statistic;
  outcome.threshold = chi2_quantile(static_cast<double>(k), alpha);
  outcome.p_value = chi2_pvalue(statistic, k);
  outcome.reject = statistic > outcome.threshold;
  return outcome;
}

}  // namespace

TestOutcome hotelling_one_sample(const Sample& data, std::span<const double> theta0,
                                 double alpha) {
  const std::size_t n = data.rows(), k = data.cols();
  if (theta0.size() != k)
    throw std::invalid_argument("hotelling_one_sample: theta0 dimension mismatch");
  if (n <= k) throw std::invalid_argument("hotelling_one_sample: need n > k");

  const MeanCov mc = mean_and_cov(data);
  SymMatrix w;
  try {
    w = sym_inverse(mc.cov);
  } catch (const singular_matrix_error&) {
    throw singular_matrix_error("hotelling_one_sample: singular sample covariance");
  }
  Vector d(k);
  for (std::size_t a = 0; a < k; ++a) d[a] = mc.mean[a] - theta0[a];
  return chi2_outcome("hotelling", static_cast<double>(n) * quad_form(w, d), k, alpha);
}

TestOutcome hotelling_two_sample(const Sample& data1, const Sample& data2, double alpha) {
  const std::size_t k = data1.cols();
  if (data2.cols() != k) throw std::invalid_argument("hotelling_two_sample: dimension mismatch");
  if (data1.rows() <= k || data2.rows() <= k)
    throw std::invalid_argument("hotelling_two_sample: need n > k in each sample");

  const MeanCov mc1 = mean_and_cov(data1), mc2 = mean_and_cov(data2);
  SymMatrix pooled = mc1.cov;
  pooled *= 1.0 / static_cast<double>(data1.rows());
  SymMatrix second = mc2.cov;
  second *= 1.0 / static_cast<double>(data2.rows());
  pooled += second;

  SymMatrix w;
  try {
    w = sym_inverse(pooled);
  } catch (const singular_matrix_error&) {
    throw singular_matrix_error("hotelling_two_sample: singular combined covariance");
  }
  Vector d(k);
  for (std::size_t a = 0; a < k; ++a) d[a] = mc1.mean[a] - mc2.mean[a];
  return chi2_outcome("hotelling", quad_form(w, d), k, alpha);
}

}  // namespace loctest
