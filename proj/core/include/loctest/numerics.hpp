#ifndef LOCTEST_NUMERICS_HPP
#define LOCTEST_NUMERICS_HPP

#include <cstddef>
#include <span>

namespace loctest {

// Regularized lower incomplete gamma P(a, x); series for x < a+1, continued
// fraction otherwise.
double regularized_gamma_p(double a, double x);

double gamma_cdf(double shape, double rate, double x);
// Inverse of gamma_cdf in x for fixed shape/rate (Newton from a
// Wilson-Hilferty seed, bisection fallback).
double gamma_quantile(double shape, double rate, double p);

double chi2_cdf(double df, double x);
// Upper-tail quantile: returns x with P(X > x) = alpha for X ~ chi2(df).
double chi2_quantile(double df, double alpha);

// CDF of the noncentral chi-square with `df` degrees of freedom and
// noncentrality `lambda`, evaluated via a Poisson-weighted mixture of central
// chi-square CDFs expanded outward from the modal Poisson term.
double noncentral_chi2_cdf(double x, double df, double lambda);

double normal_cdf(double x);

// Order-statistic quantile: the ceil(p*n)-th smallest value (the minimum when
// p == 0). `values` is copied and partially sorted.
double empirical_quantile(std::span<const double> values, double p);

}  // namespace loctest

#endif
