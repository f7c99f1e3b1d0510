#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "qlspatial/correlation.hpp"
#include "qlspatial/field.hpp"
#include "qlspatial/lattice.hpp"

namespace qlspatial {

struct SemivariogramBin {
  double lag = 0.0;    // bin center
  double gamma = 0.0;  // half the mean squared difference
  std::size_t count = 0;
};

struct Semivariogram {
  std::vector<SemivariogramBin> bins;
  double bin_width = 0.5;
  double max_lag = 0.0;
  bool constant_field = false;
  std::vector<std::string> warnings;
};

/// Matheron estimator over L2 site distances. Bin k is centered at k * width
/// and collects pairs with distance in ((k - 1/2) width, (k + 1/2) width];
/// only pairs with distance <= max_lag enter. Empty bins are dropped with a
/// warning. max_lag may not exceed half the lattice diagonal.
Semivariogram empirical_semivariogram(const BinaryField& field, const Lattice& lattice,
                                      double bin_width, double max_lag);

/// Default bins: width 0.5 lattice units (times spacing), max lag min(m, n)/2.
Semivariogram empirical_semivariogram(const BinaryField& field, const Lattice& lattice);

/// Exponential model c (1 - exp(-h / r)) without nugget.
struct ExponentialVariogramFit {
  double sill = 0.0;
  double range = 0.0;
  double objective = 0.0;  // weighted residual sum of squares
  bool at_lower_bound = false;
  bool at_upper_bound = false;
  double first_lag = 0.0;  // smallest binned lag

  double operator()(double h) const;
  /// Implied correlation exp(-h / r) at the first binned lag is below 0.1
  /// (or the range is pinned at the short end of the search): no usable
  /// spatial signal.
  bool near_independence() const {
    return at_lower_bound || range * std::log(10.0) <= first_lag;
  }
};

/// Weighted least squares with pair-count weights. The sill has a closed
/// form given the range; the range is searched over
/// [bin_width / 10, 10 max_lag] on a log scale.
ExponentialVariogramFit fit_exponential(const Semivariogram& semivariogram);

/// How a fitted range maps to the exponential scale parameter.
enum class RangeConvention {
  literal,  // scale = range
  thirds,   // scale = range / 3 (range read as the effective range)
};

/// a = 1, L2 metric, rho = exp(-1 / scale) so that rho^d = exp(-d / scale).
CorrelationModel correlation_from_fit(const ExponentialVariogramFit& fit,
                                      RangeConvention convention = RangeConvention::literal);

/// Same map applied to a bare range value.
CorrelationModel correlation_from_range(double range,
                                        RangeConvention convention = RangeConvention::literal);

}  // namespace qlspatial
