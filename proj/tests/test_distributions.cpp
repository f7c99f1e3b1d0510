#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "qlspatial/distributions.hpp"

using namespace qlspatial;

namespace {

// Plackett's identity: d/dr P(W1 > z1, W2 > z2) = phi2(z1, z2; r). Composite
// Simpson over the correlation, independent of the library's w-integral.
double orthant_by_plackett(double z1, double z2, double r) {
  auto phi2 = [&](double t) {
    const double q = 1.0 - t * t;
    return std::exp(-(z1 * z1 - 2.0 * t * z1 * z2 + z2 * z2) / (2.0 * q)) /
           (2.0 * std::numbers::pi * std::sqrt(q));
  };
  const int steps = 20000;
  const double h = r / steps;
  double s = phi2(0.0) + phi2(r);
  for (int i = 1; i < steps; ++i) s += (i % 2 ? 4.0 : 2.0) * phi2(i * h);
  return normal_sf(z1) * normal_sf(z2) + s * h / 3.0;
}

}  // namespace

TEST_CASE("normal cdf and quantile") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-14));
  CHECK(normal_sf(8.0) == doctest::Approx(6.22096057427178e-16).epsilon(1e-10));
  for (double p : {1e-12, 1e-6, 0.001, 0.02425, 0.2, 0.5, 0.7, 0.97575, 0.999, 1 - 1e-9}) {
    const double x = normal_quantile(p);
    CHECK(std::abs(normal_cdf(x) - p) <= 1e-10 * std::max(1.0, 0.0));
    if (p < 0.5) {
      CHECK(normal_cdf(x) == doctest::Approx(p).epsilon(1e-9));
    }
  }
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK_THROWS_AS(normal_quantile(0.0), std::invalid_argument);
  CHECK_THROWS_AS(normal_quantile(1.0), std::invalid_argument);
}

TEST_CASE("bivariate normal upper orthant") {
  // Independence factorization.
  CHECK(bvn_upper_orthant(0.4, -1.1, 0.0) == doctest::Approx(normal_sf(0.4) * normal_sf(-1.1)));
  // Sheppard's formula at the origin.
  for (double r : {-0.9, -0.3, 0.2, 0.5, 0.95}) {
    CHECK(std::abs(bvn_upper_orthant(0.0, 0.0, r) -
                   (0.25 + std::asin(r) / (2.0 * std::numbers::pi))) <= 1e-8);
  }
  CHECK(bvn_upper_orthant(0.0, 0.0, 0.5) == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
  // Comonotone limit.
  CHECK(std::abs(bvn_upper_orthant(0.7, 0.7, 0.999999) - normal_sf(0.7)) < 1e-3);
  CHECK(std::abs(bvn_upper_orthant(0.7, 0.7, 1.0 - 1e-12) - normal_sf(0.7)) < 1e-5);

  for (double z1 : {-1.5, -0.2, 0.3, 1.2, 2.5}) {
    for (double z2 : {-0.7, 0.0, 0.4, 1.9}) {
      for (double r : {-0.95, -0.6, -0.1, 0.3, 0.8, 0.99}) {
        CHECK(std::abs(bvn_upper_orthant(z1, z2, r) - orthant_by_plackett(z1, z2, r)) <= 1e-8);
      }
    }
  }
  CHECK_THROWS_AS(bvn_upper_orthant(0.0, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("KS distance") {
  // Exact quantiles at (i + 1/2)/n give distance 1/(2n).
  std::vector<double> q;
  const int n = 200;
  for (int i = 0; i < n; ++i) q.push_back(normal_quantile((i + 0.5) / n));
  CHECK(ks_distance_standard_normal(q) == doctest::Approx(0.5 / n).epsilon(1e-8));

  const std::vector<double> point(10, 0.0);
  CHECK(ks_distance_standard_normal(point) == doctest::Approx(0.5));

  CHECK(ks_critical_value(0.01, 2000) == doctest::Approx(1.6276 / std::sqrt(2000.0)).epsilon(1e-4));
}
