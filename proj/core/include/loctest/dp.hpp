#ifndef LOCTEST_DP_HPP
#define LOCTEST_DP_HPP

#include <cstddef>
#include <variant>

#include "loctest/matrix.hpp"
#include "loctest/rng.hpp"
#include "loctest/spatial.hpp"
#include "loctest/sym_matrix.hpp"

namespace loctest {

struct GaussianBase {
  Vector mean;
  SymMatrix covariance;
};

/// Base measure of the Dirichlet-process prior. A variant so further
/// families can slot in without touching the samplers.
using BaseMeasure = std::variant<GaussianBase>;

struct DPPrior {
  double mass = 1.0;  // concentration M > 0
  BaseMeasure base;
};

/// Number of stick-breaking atoms keeping the expected leftover stick mass
/// below 1e-4 at the given posterior concentration mass + n.
std::size_t auto_truncation(double mass, std::size_t n);

/// Stick-breaking weights: V_1..V_{count-1} iid Beta(1, concentration),
/// V_count = 1, W_j = V_j prod_{l<j} (1 - V_l). Sums to 1.
Vector stick_break_weights(std::size_t count, double concentration, Rng& rng);

/// Atoms of one truncated posterior draw: each row independently comes from
/// the base measure with probability mass/(mass+n), otherwise it is a
/// uniformly chosen data row.
Matrix draw_posterior_atoms(std::size_t count, const Sample& data, const DPPrior& prior,
                            Rng& rng);

/// One draw of the spatial median under the stick-breaking posterior.
/// truncation 0 selects the automatic rule. Duplicate data-row atoms are
/// merged (their stick weights summed) before solving; the solution is
/// unchanged, the solve is much smaller.
Vector draw_posterior_median(const Sample& data, const DPPrior& prior, std::size_t truncation,
                             Rng& rng, const MedianOptions& opts = {});

/// Flat-Dirichlet weights: iid standard exponentials normalized to sum 1.
Vector bayesian_bootstrap_weights(std::size_t n, Rng& rng);

/// One draw of the spatial median under the Bayesian bootstrap (the
/// noninformative mass -> 0 limit of the posterior above).
Vector draw_bootstrap_median(const Sample& data, Rng& rng, const MedianOptions& opts = {});

}  // namespace loctest

#endif
