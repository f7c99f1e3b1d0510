#include "qlspatial/variogram.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include <boost/math/tools/minima.hpp>

#include "qlspatial/error.hpp"

namespace qlspatial {

Semivariogram empirical_semivariogram(const BinaryField& field, const Lattice& lattice,
                                      double bin_width, double max_lag) {
  if (field.size() != lattice.size()) {
    throw std::invalid_argument("field size does not match lattice");
  }
  if (!(bin_width > 0.0)) {
    throw std::invalid_argument("bin width must be positive");
  }
  const double diagonal =
      lattice.offset_distance(lattice.rows() - 1, lattice.cols() - 1, Metric::l2());
  if (!(max_lag > 0.0) || max_lag > 0.5 * diagonal + 1e-12) {
    throw std::invalid_argument("max lag must be positive and at most half the lattice diagonal");
  }

  const auto nbins = static_cast<std::size_t>(std::floor(max_lag / bin_width + 0.5)) + 1;
  std::vector<double> sums(nbins, 0.0);
  std::vector<std::size_t> counts(nbins, 0);
  const std::size_t n = lattice.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = lattice.distance(i, j, Metric::l2());
      if (d > max_lag) continue;
      // Round-half-down so that a distance on a bin edge joins the lower bin.
      const auto k = static_cast<std::size_t>(std::ceil(d / bin_width - 0.5));
      if (k == 0 || k >= nbins) continue;
      const double diff = field[i] - field[j];
      sums[k] += diff * diff;
      ++counts[k];
    }
  }

  Semivariogram out;
  out.bin_width = bin_width;
  out.max_lag = max_lag;
  out.constant_field = field.is_constant();
  if (out.constant_field) {
    out.warnings.push_back("field is constant: semivariogram is identically zero");
  }
  std::size_t dropped = 0;
  for (std::size_t k = 1; k < nbins; ++k) {
    if (counts[k] == 0) {
      ++dropped;
      continue;
    }
    out.bins.push_back({static_cast<double>(k) * bin_width,
                        sums[k] / (2.0 * static_cast<double>(counts[k])), counts[k]});
  }
  if (dropped > 0) {
    out.warnings.push_back("dropped " + std::to_string(dropped) +
                           " lag bins with no site pairs at those distances");
  }
  return out;
}

Semivariogram empirical_semivariogram(const BinaryField& field, const Lattice& lattice) {
  const double width = 0.5 * lattice.spacing();
  const double max_lag =
      0.5 * static_cast<double>(std::min(lattice.rows(), lattice.cols())) * lattice.spacing();
  return empirical_semivariogram(field, lattice, width, max_lag);
}

double ExponentialVariogramFit::operator()(double h) const {
  return sill * (1.0 - std::exp(-h / range));
}

namespace {

struct Profile {
  double sill;
  double objective;
};

// Closed-form weighted LS sill for a fixed range.
Profile profile(const Semivariogram& sv, double range) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& b : sv.bins) {
    const double f = 1.0 - std::exp(-b.lag / range);
    const double w = static_cast<double>(b.count);
    num += w * f * b.gamma;
    den += w * f * f;
  }
  const double sill = den > 0.0 ? std::max(0.0, num / den) : 0.0;
  double objective = 0.0;
  for (const auto& b : sv.bins) {
    const double r = b.gamma - sill * (1.0 - std::exp(-b.lag / range));
    objective += static_cast<double>(b.count) * r * r;
  }
  return {sill, objective};
}

}  // namespace

ExponentialVariogramFit fit_exponential(const Semivariogram& sv) {
  if (sv.bins.size() < 3) {
    throw std::invalid_argument("exponential fit needs at least 3 nonempty bins");
  }
  if (std::all_of(sv.bins.begin(), sv.bins.end(), [](const auto& b) { return b.gamma == 0.0; })) {
    throw DataError("no spatial variation: semivariogram is identically zero");
  }
  const double lo = std::log(sv.bin_width / 10.0);
  const double hi = std::log(10.0 * sv.max_lag);

  std::uintmax_t max_iter = 500;
  const auto [log_range, objective] = boost::math::tools::brent_find_minima(
      [&](double log_r) { return profile(sv, std::exp(log_r)).objective; }, lo, hi, 40,
      max_iter);
  if (max_iter >= 500) {
    throw Error("exponential variogram fit: range search did not converge");
  }

  ExponentialVariogramFit out;
  out.range = std::exp(log_range);
  out.sill = profile(sv, out.range).sill;
  out.objective = objective;
  const double edge = 1e-3 * (hi - lo);
  out.at_lower_bound = log_range - lo < edge;
  out.at_upper_bound = hi - log_range < edge;
  out.first_lag = sv.bins.front().lag;
  return out;
}

CorrelationModel correlation_from_range(double range, RangeConvention convention) {
  if (!(range > 0.0)) {
    throw std::invalid_argument("variogram range must be positive");
  }
  const double scale = convention == RangeConvention::thirds ? range / 3.0 : range;
  return CorrelationModel{1.0, std::exp(-1.0 / scale), Metric::l2()};
}

CorrelationModel correlation_from_fit(const ExponentialVariogramFit& fit,
                                      RangeConvention convention) {
  return correlation_from_range(fit.range, convention);
}

}  // namespace qlspatial
