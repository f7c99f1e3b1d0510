#pragma once

#include <span>

namespace qlspatial {

double normal_pdf(double x);
double normal_cdf(double x);
/// Upper tail 1 - Phi(x), accurate in the far right tail.
double normal_sf(double x);

/// Inverse of normal_cdf on (0, 1). Rational approximation followed by one
/// Newton step; absolute error below 1e-10 in the probability argument's
/// image.
double normal_quantile(double p);

/// P(W1 > z1, W2 > z2) for a standard bivariate normal with correlation r,
/// |r| < 1. Integrates the conditional normal tail over w1 by adaptive
/// Gauss-Kronrod; absolute error below 1e-8.
double bvn_upper_orthant(double z1, double z2, double r);

/// Two-sided Kolmogorov-Smirnov distance between the empirical distribution
/// of the samples and the standard normal.
double ks_distance_standard_normal(std::span<const double> samples);

/// Asymptotic KS critical value sqrt(-log(alpha/2)/2)/sqrt(n).
double ks_critical_value(double alpha, double n);

}  // namespace qlspatial
