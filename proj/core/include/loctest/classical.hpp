#ifndef LOCTEST_CLASSICAL_HPP
#define LOCTEST_CLASSICAL_HPP

#include <cstddef>
#include <span>

#include "loctest/matrix.hpp"
#include "loctest/outcome.hpp"
#include "loctest/rng.hpp"

namespace loctest {

/// sign and signed_rank score the one-sample statistic; sign and rank
/// (pooled) score the two-sample statistic.
enum class ScoreKind { sign, rank, signed_rank };

struct ScoreStatistic {
  double q_sq = 0.0;
  Matrix scores;  // row i = T(Y_i - theta0)
};

/// One-sample score statistic Q^2 = n m' S^-1 m with m the mean score and
/// S the mean score outer product. Scores are returned for resampling reuse.
ScoreStatistic score_statistic(const Sample& data, std::span<const double> theta0,
                               ScoreKind kind);

/// Upper chi-square tail of q_sq on k degrees of freedom.
double chi2_pvalue(double q_sq, std::size_t k);

enum class ResamplingMode { automatic, monte_carlo, exhaustive };

/// Conditional p-value over sign flips delta in {-1,+1}^n applied to the
/// centered data. Monte Carlo estimates use the add-one correction
/// (count+1)/(flips+1); automatic mode enumerates all 2^n patterns when
/// 2^n <= 4096.
double sign_flip_pvalue(const Sample& data, std::span<const double> theta0, ScoreKind kind,
                        std::size_t flips, Rng& rng,
                        ResamplingMode mode = ResamplingMode::automatic);

struct InnerStandardization {
  Matrix transform;     // H, normalized to unit determinant
  Vector shift;         // h
  Matrix standardized;  // pooled rows H(Y_i - h), sample 1 rows first
  std::size_t iterations = 0;
  double mean_residual = 0.0;     // norm of the pooled score mean
  double scatter_residual = 0.0;  // max | k (mean T T') / (mean |T|^2) - I |
};

/// Finds H, h so the pooled scores of Z_i = H(Y_i - h) have zero mean and
/// identity-proportional scatter (alternating Newton shift / square-root
/// scatter updates, with step damping when a pass fails to contract). Rank
/// scores have zero pooled mean identically, so only the scatter condition is
/// iterated and h stays 0. For very small pooled samples the sign variant may
/// have no solution at all — the standardized median can pin to a data atom,
/// where the score mean cannot reach zero — and then a convergence_error
/// reports the stalled residuals.
InnerStandardization inner_standardize_two_sample(const Sample& data1, const Sample& data2,
                                                  ScoreKind kind, double tol = 1e-9,
                                                  std::size_t max_iter = 200);

/// Convenience wrapper: score_statistic with the chi-square calibration.
TestOutcome one_sample_score_test(const Sample& data, std::span<const double> theta0,
                                  ScoreKind kind, double alpha = 0.05);

/// Two-sample statistic
///   Q^2 = k sum_j n_j |mean_j T|^2 / ((1/n) sum |T|^2)
/// on inner-standardized (default) or raw pooled scores, chi-square p-value.
TestOutcome two_sample_score_test(const Sample& data1, const Sample& data2, ScoreKind kind,
                                  bool standardize = true, double alpha = 0.05);

/// Label-permutation p-value of the two-sample statistic. The pooled inner
/// standardization is label-invariant, so it is computed once and only the
/// group sums are recomputed per assignment. Exhaustive when C(n, n1) <= 4096
/// in automatic mode.
double permutation_pvalue(const Sample& data1, const Sample& data2, ScoreKind kind,
                          std::size_t perms, Rng& rng,
                          ResamplingMode mode = ResamplingMode::automatic);

/// Mean-based location tests with the chi-square (not F) calibration and
/// 1/n-denominator covariances.
TestOutcome hotelling_one_sample(const Sample& data, std::span<const double> theta0,
                                 double alpha = 0.05);
TestOutcome hotelling_two_sample(const Sample& data1, const Sample& data2, double alpha = 0.05);

}  // namespace loctest

#endif
