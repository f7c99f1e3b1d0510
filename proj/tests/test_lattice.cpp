#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "qlspatial/lattice.hpp"

using namespace qlspatial;

TEST_CASE("sites are labeled columnwise") {
  const Lattice lat(4, 4);
  CHECK(lat.size() == 16);
  CHECK(lat.site_coords(0) == Site{0, 0});
  // Fifth site opens the second column.
  CHECK(lat.site_coords(4) == Site{0, 1});
  CHECK(lat.site_coords(3) == Site{3, 0});

  const Lattice small(3, 2);
  CHECK(small.site_coords(5) == Site{2, 1});
}

TEST_CASE("site index round trip") {
  const Lattice lat(5, 7);
  for (std::size_t k = 0; k < lat.size(); ++k) {
    CHECK(lat.site_index(lat.site_coords(k)) == k);
  }
}

TEST_CASE("out of range indices are rejected") {
  const Lattice lat(3, 2);
  CHECK_THROWS_AS(lat.site_coords(6), std::out_of_range);
  CHECK_THROWS_AS(lat.site_index(Site{3, 0}), std::out_of_range);
  CHECK_THROWS_AS(lat.distance(0, 6, Metric::l1()), std::out_of_range);
  CHECK_THROWS_AS(Lattice(0, 3), std::invalid_argument);
  CHECK_THROWS_AS(Lattice(2, 3, 0.0), std::invalid_argument);
}

TEST_CASE("unit step and diagonal distances") {
  const Lattice lat(4, 4);
  CHECK(lat.distance(0, 1, Metric::l1()) == doctest::Approx(1.0));
  CHECK(lat.distance(0, 5, Metric::l2()) == doctest::Approx(std::sqrt(2.0)));
  CHECK(lat.distance(0, 5, Metric::l1()) == doctest::Approx(2.0));
  CHECK(lat.distance(3, 3, Metric::l2()) == 0.0);

  const Lattice spaced(4, 4, 2.5);
  CHECK(spaced.distance(0, 1, Metric::l1()) == doctest::Approx(2.5));
  CHECK(Lattice(4, 4).distance(0, 5, Metric{3.0}) == doctest::Approx(std::cbrt(2.0)));
}

TEST_CASE("metric properties on random site pairs and triples") {
  const Lattice lat(9, 11);
  std::mt19937 rng(7);
  std::uniform_int_distribution<std::size_t> pick(0, lat.size() - 1);
  for (int t = 0; t < 500; ++t) {
    const std::size_t i = pick(rng), j = pick(rng), k = pick(rng);
    const double d1 = lat.distance(i, j, Metric::l1());
    const double d2 = lat.distance(i, j, Metric::l2());
    CHECK(d1 == lat.distance(j, i, Metric::l1()));
    CHECK(d1 >= d2 - 1e-12);
    const Site a = lat.site_coords(i), b = lat.site_coords(j);
    const bool aligned = a.row == b.row || a.col == b.col;
    CHECK((std::abs(d1 - d2) < 1e-12) == aligned);
    CHECK((d2 == 0.0) == (i == j));
    for (Metric m : {Metric::l1(), Metric::l2(), Metric{3.0}}) {
      CHECK(lat.distance(i, k, m) <= lat.distance(i, j, m) + lat.distance(j, k, m) + 1e-12);
    }
  }
}
