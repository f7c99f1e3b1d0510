#include "qlspatial/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace qlspatial {

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) * std::numbers::inv_sqrtpi / std::numbers::sqrt2;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("normal_quantile: p must lie in (0, 1)");
  }
  // Acklam's rational approximation, relative error ~1.15e-9.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Newton polish. Work with the smaller tail for accuracy.
  const double pdf = normal_pdf(x);
  if (pdf > 0.0) {
    const double err = p < 0.5 ? normal_cdf(x) - p : (1.0 - p) - normal_sf(x);
    x -= err / pdf;
  }
  return x;
}

double bvn_upper_orthant(double z1, double z2, double r) {
  if (!(std::abs(r) < 1.0)) {
    throw std::invalid_argument("bvn_upper_orthant: |r| must be < 1");
  }
  if (r == 0.0) {
    return normal_sf(z1) * normal_sf(z2);
  }
  const double s = std::sqrt((1.0 - r) * (1.0 + r));
  auto integrand = [=](double w) { return normal_pdf(w) * normal_sf((z2 - r * w) / s); };

  // Mass of phi beyond |w| = 10 is below 1e-23.
  constexpr double tail = 10.0;
  const double lo = std::max(z1, -tail);
  const double hi = tail;
  if (lo >= hi) {
    return 0.0;
  }
  // The conditional tail switches from 0 to 1 around w = z2 / r over a width
  // of order s / |r|; splitting there keeps the adaptive rule from missing it.
  std::vector<double> knots{lo};
  const double kink = z2 / r;
  const double width = s / std::abs(r);
  for (double k : {kink - 8.0 * width, kink, kink + 8.0 * width}) {
    if (k > knots.back() && k < hi) knots.push_back(k);
  }
  knots.push_back(hi);

  using boost::math::quadrature::gauss_kronrod;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    total += gauss_kronrod<double, 31>::integrate(integrand, knots[i], knots[i + 1], 15, 1e-11);
  }
  return std::clamp(total, 0.0, 1.0);
}

double ks_distance_standard_normal(std::span<const double> samples) {
  if (samples.empty()) {
    throw std::invalid_argument("ks_distance_standard_normal: no samples");
  }
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double largest = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double cdf = normal_cdf(sorted[i]);
    const double di = static_cast<double>(i);
    largest = std::max({largest, (di + 1.0) / n - cdf, cdf - di / n});
  }
  return largest;
}

double ks_critical_value(double alpha, double n) {
  if (!(alpha > 0.0 && alpha < 1.0) || !(n > 0.0)) {
    throw std::invalid_argument("ks_critical_value: need 0 < alpha < 1 and n > 0");
  }
  return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(n);
}

}  // namespace qlspatial
