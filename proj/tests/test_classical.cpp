#include <doctest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "loctest/classical.hpp"
#include "loctest/datagen.hpp"
#include "loctest/errors.hpp"
#include "loctest/numerics.hpp"
#include "loctest/rng.hpp"
#include "oracle_helpers.hpp"

using namespace loctest;

namespace {

Sample gaussian_sample(std::size_t n, std::uint64_t seed, double shift0 = 0.0,
                       double shift1 = 0.0) {
  Rng rng(seed);
  Sample s = sample_mvn(Vector(2, 0.0), SymMatrix::identity(2), n, rng);
  for (std::size_t i = 0; i < n; ++i) {
    s(i, 0) += shift0;
    s(i, 1) += shift1;
  }
  return s;
}

// From-scratch one-sample scores of data - theta0.
Matrix oracle_scores(const Sample& data, std::span<const double> theta0, ScoreKind kind) {
  const std::size_t n = data.rows(), k = data.cols();
  Matrix centered(n, k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) centered(i, j) = data(i, j) - theta0[j];
  Matrix t(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    if (kind == ScoreKind::sign) {
      const Vector u = oracle::unit_of(centered.row(i));
      std::copy(u.begin(), u.end(), t.row(i).begin());
    } else {
      // Signed rank: (1/2n) sum_j [ U(x_i - x_j) + U(x_i + x_j) ].
      Vector acc(k, 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        Vector diff(k), sum(k);
        for (std::size_t d = 0; d < k; ++d) {
          diff[d] = centered(i, d) - centered(j, d);
          sum[d] = centered(i, d) + centered(j, d);
        }
        const Vector ud = oracle::unit_of(diff), us = oracle::unit_of(sum);
        for (std::size_t d = 0; d < k; ++d) acc[d] += ud[d] + us[d];
      }
      for (std::size_t d = 0; d < k; ++d) t(i, d) = acc[d] / (2.0 * static_cast<double>(n));
    }
  }
  return t;
}

// Q^2 = n m' S^-1 m from a score matrix, all from scratch.
double oracle_q_sq(const Matrix& scores) {
  const std::size_t n = scores.rows(), k = scores.cols();
  oracle::Mat s(k, std::vector<double>(k, 0.0));
  Vector m(k, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < k; ++a) {
      m[a] += scores(i, a) / static_cast<double>(n);
      for (std::size_t b = 0; b < k; ++b)
        s[a][b] += scores(i, a) * scores(i, b) / static_cast<double>(n);
    }
  return static_cast<double>(n) * oracle::quad(oracle::mat_inverse(s), m);
}

// Two-sample statistic from a pooled score matrix given the first-sample
// index set, from scratch.
double oracle_two_sample_q(const Matrix& scores, const std::vector<std::size_t>& first) {
  const std::size_t n = scores.rows(), k = scores.cols();
  const std::size_t n1 = first.size(), n2 = n - n1;
  std::vector<bool> in1(n, false);
  for (std::size_t i : first) in1[i] = true;
  Vector m1(k, 0.0), m2(k, 0.0);
  double msq = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < k; ++a) {
      (in1[i] ? m1[a] : m2[a]) += scores(i, a);
      msq += scores(i, a) * scores(i, a);
    }
  msq /= static_cast<double>(n);
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    s1 += m1[a] * m1[a] / (static_cast<double>(n1) * n1);
    s2 += m2[a] * m2[a] / (static_cast<double>(n2) * n2);
  }
  return static_cast<double>(k) * (n1 * s1 + n2 * s2) / msq;
}

// Pooled spatial-rank scores recomputed from scratch.
Matrix oracle_pooled_rank_scores(const Matrix& z) {
  const std::size_t n = z.rows(), k = z.cols();
  Matrix t(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    Vector acc(k, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      Vector diff(k);
      for (std::size_t d = 0; d < k; ++d) diff[d] = z(i, d) - z(j, d);
      const Vector u = oracle::unit_of(diff);
      for (std::size_t d = 0; d < k; ++d) acc[d] += u[d];
    }
    for (std::size_t d = 0; d < k; ++d) t(i, d) = acc[d] / static_cast<double>(n);
  }
  return t;
}

}  // namespace

TEST_SUITE("classical") {
  TEST_CASE("one-sample statistic matches the from-scratch formula") {
    const Sample data = gaussian_sample(15, 51, 0.4);
    const Vector theta0 = {0.0, 0.0};
    for (ScoreKind kind : {ScoreKind::sign, ScoreKind::signed_rank}) {
      const ScoreStatistic ss = score_statistic(data, theta0, kind);
      const Matrix ref = oracle_scores(data, theta0, kind);
      for (std::size_t i = 0; i < data.rows(); ++i)
        for (std::size_t j = 0; j < 2; ++j)
          CHECK(ss.scores(i, j) == doctest::Approx(ref(i, j)).epsilon(1e-12).scale(1.0));
      CHECK(ss.q_sq == doctest::Approx(oracle_q_sq(ref)).epsilon(1e-9));
    }
  }

  TEST_CASE("rank scores are rejected for the one-sample statistic") {
    const Sample data = gaussian_sample(10, 52);
    CHECK_THROWS_AS(score_statistic(data, Vector{0.0, 0.0}, ScoreKind::rank),
                    std::invalid_argument);
    CHECK_THROWS_AS(score_statistic(data, Vector{0.0}, ScoreKind::sign), std::invalid_argument);
    Sample tiny(2, 2);
    CHECK_THROWS_AS(score_statistic(tiny, Vector{0.0, 0.0}, ScoreKind::sign),
                    std::invalid_argument);
  }

  TEST_CASE("sign-flip p-value equals exhaustive enumeration recomputed from raw data") {
    // n = 10 means 1024 patterns, inside the automatic exhaustive range.
    // The oracle recomputes scores from the flipped raw data each time; the
    // library only re-signs precomputed rows, so agreement also validates
    // the flip identity for both score kinds.
    const std::size_t n = 10;
    const Sample data = gaussian_sample(n, 53, 0.3, -0.2);
    const Vector theta0 = {0.0, 0.0};
    for (ScoreKind kind : {ScoreKind::sign, ScoreKind::signed_rank}) {
      // The score scatter is flip-invariant; compute W once from the
      // unflipped oracle scores.
      const Matrix base = oracle_scores(data, theta0, kind);
      oracle::Mat s(2, std::vector<double>(2, 0.0));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < 2; ++a)
          for (std::size_t b = 0; b < 2; ++b)
            s[a][b] += base(i, a) * base(i, b) / static_cast<double>(n);
      const oracle::Mat w = oracle::mat_inverse(s);

      const auto q_from_raw = [&](std::uint32_t mask) {
        Sample flipped = data;
        for (std::size_t i = 0; i < n; ++i)
          if ((mask >> i) & 1)
            for (std::size_t d = 0; d < 2; ++d)
              flipped(i, d) = theta0[d] - (data(i, d) - theta0[d]);
        const Matrix t = oracle_scores(flipped, theta0, kind);
        Vector m(2, 0.0);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t d = 0; d < 2; ++d) m[d] += t(i, d) / static_cast<double>(n);
        return static_cast<double>(n) * oracle::quad(w, m);
      };

      const double observed = q_from_raw(0);
      const double eps = 1e-12 * (1.0 + std::abs(observed));
      std::size_t count = 0;
      for (std::uint32_t mask = 0; mask < (1u << n); ++mask)
        if (q_from_raw(mask) >= observed - eps) ++count;
      const double expected = static_cast<double>(count) / static_cast<double>(1u << n);

      Rng rng(54);
      const double p = sign_flip_pvalue(data, theta0, kind, 100, rng);
      CHECK(p == doctest::Approx(expected).epsilon(1e-9));
      // Explicit exhaustive mode gives the same answer.
      Rng rng2(55);
      CHECK(sign_flip_pvalue(data, theta0, kind, 100, rng2, ResamplingMode::exhaustive) ==
            doctest::Approx(expected).epsilon(1e-12));
    }
  }

  TEST_CASE("Monte Carlo sign-flip p-value approaches the exhaustive value") {
    const Sample data = gaussian_sample(11, 56, 0.35);
    const Vector theta0 = {0.0, 0.0};
    Rng r1(57), r2(58);
    const double exhaustive =
        sign_flip_pvalue(data, theta0, ScoreKind::sign, 1, r1, ResamplingMode::exhaustive);
    const double mc =
        sign_flip_pvalue(data, theta0, ScoreKind::sign, 20000, r2, ResamplingMode::monte_carlo);
    const double se = std::sqrt(std::max(exhaustive * (1.0 - exhaustive), 1e-6) / 20000.0);
    CHECK(std::abs(mc - exhaustive) <= 4.0 * se + 1e-4);
  }

  TEST_CASE("sign-flip input validation") {
    const Sample big = gaussian_sample(30, 59);
    Rng rng(60);
    CHECK_THROWS_AS(
        sign_flip_pvalue(big, Vector{0.0, 0.0}, ScoreKind::sign, 10, rng,
                         ResamplingMode::exhaustive),
        std::invalid_argument);
    const Sample small = gaussian_sample(8, 61);
    CHECK_THROWS_AS(sign_flip_pvalue(small, Vector{0.0, 0.0}, ScoreKind::sign, 0, rng),
                    std::invalid_argument);
  }

  TEST_CASE("two-sample statistic without standardization matches the oracle") {
    const Sample d1 = gaussian_sample(9, 62, 0.5);
    const Sample d2 = gaussian_sample(8, 63);
    for (ScoreKind kind : {ScoreKind::sign, ScoreKind::rank}) {
      const TestOutcome out = two_sample_score_test(d1, d2, kind, /*standardize=*/false);
      // Recompute from scratch: pool rows, score, group sums.
      Matrix pooled(17, 2);
      for (std::size_t i = 0; i < 9; ++i)
        for (std::size_t j = 0; j < 2; ++j) pooled(i, j) = d1(i, j);
      for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 2; ++j) pooled(9 + i, j) = d2(i, j);
      Matrix scores(17, 2);
      if (kind == ScoreKind::sign) {
        for (std::size_t i = 0; i < 17; ++i) {
          const Vector u = oracle::unit_of(pooled.row(i));
          scores(i, 0) = u[0];
          scores(i, 1) = u[1];
        }
      } else {
        scores = oracle_pooled_rank_scores(pooled);
      }
      std::vector<std::size_t> first(9);
      std::iota(first.begin(), first.end(), 0u);
      CHECK(out.statistic == doctest::Approx(oracle_two_sample_q(scores, first)).epsilon(1e-10));
    }
  }

  TEST_CASE("permutation p-value equals exhaustive enumeration over assignments") {
    // n1 = 5, n2 = 5: C(10,5) = 252 assignments, recomputed from scratch on
    // the (label-invariant) standardized pooled rows. The seeds matter: on a
    // pooled sample this small the joint standardization can fail to exist
    // (median pinned at a data atom), so the fixture must be a configuration
    // that admits it.
    const Sample d1 = gaussian_sample(5, 82, 0.8);
    const Sample d2 = gaussian_sample(5, 83);
    for (ScoreKind kind : {ScoreKind::sign, ScoreKind::rank}) {
      const InnerStandardization is = inner_standardize_two_sample(d1, d2, kind);
      Matrix scores;
      if (kind == ScoreKind::sign) {
        scores = Matrix(10, 2);
        for (std::size_t i = 0; i < 10; ++i) {
          const Vector u = oracle::unit_of(is.standardized.row(i));
          scores(i, 0) = u[0];
          scores(i, 1) = u[1];
        }
      } else {
        scores = oracle_pooled_rank_scores(is.standardized);
      }
      std::vector<std::size_t> first = {0, 1, 2, 3, 4};
      const double observed = oracle_two_sample_q(scores, first);
      const double eps = 1e-12 * (1.0 + std::abs(observed));
      std::size_t count = 0, seen = 0;
      std::vector<std::size_t> pick = {0, 1, 2, 3, 4};
      for (;;) {
        ++seen;
        if (oracle_two_sample_q(scores, pick) >= observed - eps) ++count;
        std::size_t pos = 5;
        while (pos > 0 && pick[pos - 1] == 10 - 5 + pos - 1) --pos;
        if (pos == 0) break;
        ++pick[pos - 1];
        for (std::size_t i = pos; i < 5; ++i) pick[i] = pick[i - 1] + 1;
      }
      REQUIRE(seen == 252);
      const double expected = static_cast<double>(count) / 252.0;
      Rng rng(66);
      CHECK(permutation_pvalue(d1, d2, kind, 100, rng) ==
            doctest::Approx(expected).epsilon(1e-9));
    }
  }

  TEST_CASE("Monte Carlo permutation p-value approaches the exhaustive value") {
    const Sample d1 = gaussian_sample(6, 67, 0.7);
    const Sample d2 = gaussian_sample(6, 68);
    Rng r1(69), r2(70);
    const double exhaustive =
        permutation_pvalue(d1, d2, ScoreKind::rank, 1, r1, ResamplingMode::exhaustive);
    const double mc =
        permutation_pvalue(d1, d2, ScoreKind::rank, 20000, r2, ResamplingMode::monte_carlo);
    const double se = std::sqrt(std::max(exhaustive * (1.0 - exhaustive), 1e-6) / 20000.0);
    CHECK(std::abs(mc - exhaustive) <= 4.0 * se + 1e-4);
  }

  TEST_CASE("inner standardization meets its residual contract") {
    const Sample d1 = gaussian_sample(100, 71, 0.2);
    const Sample d2 = gaussian_sample(90, 72);
    for (ScoreKind kind : {ScoreKind::sign, ScoreKind::rank}) {
      const InnerStandardization is = inner_standardize_two_sample(d1, d2, kind, 1e-8);
      CHECK(is.iterations < 100);
      CHECK(is.mean_residual <= 1e-8);
      CHECK(is.scatter_residual <= 1e-8);
      // Unit determinant of the 2x2 transform.
      const double det = is.transform(0, 0) * is.transform(1, 1) -
                         is.transform(0, 1) * is.transform(1, 0);
      CHECK(det == doctest::Approx(1.0).epsilon(1e-9));
      // The standardized rows are H(Y - h).
      for (std::size_t i : {std::size_t{0}, std::size_t{57}}) {
        const double y0 = d1(i, 0) - is.shift[0], y1 = d1(i, 1) - is.shift[1];
        CHECK(is.standardized(i, 0) ==
              doctest::Approx(is.transform(0, 0) * y0 + is.transform(0, 1) * y1).epsilon(1e-10));
        CHECK(is.standardized(i, 1) ==
              doctest::Approx(is.transform(1, 0) * y0 + is.transform(1, 1) * y1).epsilon(1e-10));
      }
      // Re-standardizing the standardized rows is a near-identity fix point.
      Sample z1(100, 2), z2(90, 2);
      for (std::size_t i = 0; i < 100; ++i)
        for (std::size_t j = 0; j < 2; ++j) z1(i, j) = is.standardized(i, j);
      for (std::size_t i = 0; i < 90; ++i)
        for (std::size_t j = 0; j < 2; ++j) z2(i, j) = is.standardized(100 + i, j);
      const InnerStandardization again = inner_standardize_two_sample(z1, z2, kind, 1e-8);
      CHECK(std::abs(again.transform(0, 0) - 1.0) < 1e-4);
      CHECK(std::abs(again.transform(1, 1) - 1.0) < 1e-4);
      CHECK(std::abs(again.transform(0, 1)) < 1e-4);
      CHECK(std::abs(again.shift[0]) < 1e-4);
      CHECK(std::abs(again.shift[1]) < 1e-4);
    }
    CHECK_THROWS_AS(inner_standardize_two_sample(d1, d2, ScoreKind::signed_rank),
                    std::invalid_argument);
  }

  TEST_CASE("two-sample score test decision wiring") {
    const Sample d1 = gaussian_sample(40, 73);
    Sample d2 = gaussian_sample(35, 74);
    for (std::size_t i = 0; i < d2.rows(); ++i) d2(i, 0) += 2.0;
    const TestOutcome out = two_sample_score_test(d1, d2, ScoreKind::rank);
    CHECK(out.reject);
    REQUIRE(out.p_value.has_value());
    CHECK(*out.p_value == doctest::Approx(1.0 - chi2_cdf(2.0, out.statistic)).epsilon(1e-12));
    CHECK(out.threshold == doctest::Approx(chi2_quantile(2.0, 0.05)).epsilon(1e-12));
    CHECK(out.diagnostics.count("standardize_iterations") == 1);
    // Swapping the samples leaves the statistic unchanged.
    const TestOutcome swapped = two_sample_score_test(d2, d1, ScoreKind::rank);
    CHECK(swapped.statistic == doctest::Approx(out.statistic).epsilon(1e-6));
    // Translating both samples leaves the rank statistic unchanged.
    Sample t1 = d1, t2 = d2;
    for (std::size_t i = 0; i < t1.rows(); ++i) {
      t1(i, 0) += 10.0;
      t1(i, 1) -= 4.0;
    }
    for (std::size_t i = 0; i < t2.rows(); ++i) {
      t2(i, 0) += 10.0;
      t2(i, 1) -= 4.0;
    }
    const TestOutcome moved = two_sample_score_test(t1, t2, ScoreKind::rank);
    CHECK(moved.statistic == doctest::Approx(out.statistic).epsilon(1e-6));
  }

  TEST_CASE("degenerate two-sample data raises a singular-matrix error") {
    Sample flat1(6, 2), flat2(5, 2);
    for (std::size_t i = 0; i < 6; ++i) {
      flat1(i, 0) = 1.0;
      flat1(i, 1) = 2.0;
    }
    for (std::size_t i = 0; i < 5; ++i) {
      flat2(i, 0) = 1.0;
      flat2(i, 1) = 2.0;
    }
    // Identical rows defeat the inner standardization: the sign variant hits
    // a rank-one curvature, the rank variant produces all-zero scores.
    CHECK_THROWS_AS(two_sample_score_test(flat1, flat2, ScoreKind::sign),
                    singular_matrix_error);
    CHECK_THROWS_AS(two_sample_score_test(flat1, flat2, ScoreKind::rank),
                    singular_matrix_error);
  }

  TEST_CASE("one-sample mean test matches the closed form") {
    const Sample data = gaussian_sample(25, 75, 0.6);
    const Vector theta0 = {0.0, 0.0};
    const TestOutcome out = hotelling_one_sample(data, theta0);
    // From scratch: 1/n covariance about the mean, Q^2 = n (m - theta0)' S^-1 (m - theta0).
    const std::size_t n = data.rows();
    Vector m(2, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < 2; ++j) m[j] += data(i, j) / static_cast<double>(n);
    oracle::Mat s(2, std::vector<double>(2, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b)
          s[a][b] += (data(i, a) - m[a]) * (data(i, b) - m[b]) / static_cast<double>(n);
    Vector diff = {m[0] - theta0[0], m[1] - theta0[1]};
    const double q = static_cast<double>(n) * oracle::quad(oracle::mat_inverse(s), diff);
    CHECK(out.statistic == doctest::Approx(q).epsilon(1e-10));
    // For k = 2 the chi-square upper tail has the closed form exp(-q/2).
    REQUIRE(out.p_value.has_value());
    CHECK(*out.p_value == doctest::Approx(std::exp(-0.5 * q)).epsilon(1e-10));
    // theta0 at the sample mean: statistic 0, p-value 1.
    const TestOutcome at_mean = hotelling_one_sample(data, m);
    CHECK(at_mean.statistic == doctest::Approx(0.0).scale(1.0).epsilon(1e-18));
    CHECK(*at_mean.p_value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(!at_mean.reject);
  }

  TEST_CASE("two-sample mean test matches the closed form") {
    const Sample d1 = gaussian_sample(20, 76, 0.5);
    const Sample d2 = gaussian_sample(15, 77);
    const TestOutcome out = hotelling_two_sample(d1, d2);
    const auto mean_cov = [](const Sample& d, Vector& m, oracle::Mat& s) {
      const std::size_t n = d.rows();
      m.assign(2, 0.0);
      s.assign(2, std::vector<double>(2, 0.0));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < 2; ++j) m[j] += d(i, j) / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < 2; ++a)
          for (std::size_t b = 0; b < 2; ++b)
            s[a][b] += (d(i, a) - m[a]) * (d(i, b) - m[b]) / static_cast<double>(n);
    };
    Vector m1, m2;
    oracle::Mat s1, s2;
    mean_cov(d1, m1, s1);
    mean_cov(d2, m2, s2);
    oracle::Mat combined(2, std::vector<double>(2));
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t b = 0; b < 2; ++b)
        combined[a][b] = s1[a][b] / static_cast<double>(d1.rows()) +
                         s2[a][b] / static_cast<double>(d2.rows());
    const Vector diff = {m1[0] - m2[0], m1[1] - m2[1]};
    const double q = oracle::quad(oracle::mat_inverse(combined), diff);
    CHECK(out.statistic == doctest::Approx(q).epsilon(1e-10));
    REQUIRE(out.p_value.has_value());
    CHECK(*out.p_value == doctest::Approx(std::exp(-0.5 * q)).epsilon(1e-10));
  }

  TEST_CASE("mean tests validate their input") {
    Sample flat(8, 2);
    for (std::size_t i = 0; i < 8; ++i) {
      flat(i, 0) = 1.0;
      flat(i, 1) = 1.0;
    }
    CHECK_THROWS_AS(hotelling_one_sample(flat, Vector{0.0, 0.0}), singular_matrix_error);
    Sample two(2, 2);
    CHECK_THROWS_AS(hotelling_one_sample(two, Vector{0.0, 0.0}), std::invalid_argument);
    const Sample ok = gaussian_sample(10, 78);
    Sample mismatched(10, 3);
    CHECK_THROWS_AS(hotelling_two_sample(ok, mismatched), std::invalid_argument);
  }

  TEST_CASE("chi-square p-value wiring of the one-sample score test") {
    const Sample data = gaussian_sample(60, 79, 0.3);
    for (double alpha : {0.01, 0.05, 0.2}) {
      const TestOutcome out = one_sample_score_test(data, Vector{0.0, 0.0},
                                                    ScoreKind::signed_rank, alpha);
      REQUIRE(out.p_value.has_value());
      CHECK(*out.p_value == doctest::Approx(1.0 - chi2_cdf(2.0, out.statistic)).epsilon(1e-12));
      CHECK(out.reject == (out.statistic > chi2_quantile(2.0, alpha)));
      CHECK(out.reject == (*out.p_value < alpha));
    }
  }
}
