#ifndef LOCTEST_SPATIAL_HPP
#define LOCTEST_SPATIAL_HPP

#include <cstddef>
#include <span>

#include "loctest/matrix.hpp"

namespace loctest {

/// Unit vector y/|y|, or zero when y = 0. Output written to `out`.
void spatial_sign(std::span<const double> y, std::span<double> out);
Vector spatial_sign(std::span<const double> y);

/// Average of spatial signs of y - row over all sample rows.
Vector spatial_rank(std::span<const double> y, const Sample& sample);

/// Half the sum of the ranks of y against the sample and its reflection:
/// (1/2n) sum_j [ sign(y - Y_j) + sign(y + Y_j) ].
Vector spatial_signed_rank(std::span<const double> y, const Sample& sample);

/// Atoms with probability weights. Weights must be nonnegative and sum to 1
/// (checked to 1e-12 by the solver); zero-weight atoms are ignored.
// Nudges nearly-normalized nonnegative weights so that a plain
// left-to-right sum lands within a few ulp of 1 (the largest weight absorbs
// the measured excess). Call after normalizing large weight vectors, where
// accumulated rounding can otherwise breach the 1e-12 sum invariant.
void snap_weight_sum(Vector& weights);

struct WeightedPointSet {
  Matrix points;
  Vector weights;
};

struct MedianOptions {
  double tol = 1e-10;
  std::size_t max_iter = 100000;
  // When set, receives the objective value at the start of every iteration
  // (lets callers watch the descent).
  std::vector<double>* trace = nullptr;
};

struct MedianSolution {
  Vector location;
  double objective = 0.0;   // sum_j w_j |y_j - location|
  std::size_t iterations = 0;
  bool converged = false;
  bool at_data_point = false;
  // Set when the support is collinear (or univariate with a tied weighted
  // median), where the minimizer can be a whole segment; the midpoint of the
  // detected optimal set is returned.
  bool possibly_nonunique = false;
};

/// Minimizes sum_j w_j |y_j - theta| by Weiszfeld iteration with the
/// Vardi-Zhang step when an iterate lands on an atom. Converged when the
/// gradient norm (or the atom optimality residual) drops to tol, or the
/// relative step does. Collinear supports are reduced to a univariate
/// weighted median along the principal direction.
MedianSolution weighted_spatial_median(const WeightedPointSet& ps,
                                       const MedianOptions& opts = {});

}  // namespace loctest

#endif
