#include "qlspatial/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qlspatial {

Lattice::Lattice(std::size_t rows, std::size_t cols, double spacing)
    : rows_(rows), cols_(cols), spacing_(spacing) {
  if (rows == 0 || cols == 0) {
    throw std::invalid_argument("lattice dimensions must be positive");
  }
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw std::invalid_argument("lattice spacing must be positive and finite");
  }
}

Site Lattice::site_coords(std::size_t k) const {
  if (k >= size()) {
    throw std::out_of_range("site index " + std::to_string(k) + " outside lattice of " +
                            std::to_string(size()) + " sites");
  }
  return Site{k % rows_, k / rows_};
}

std::size_t Lattice::site_index(Site s) const {
  if (s.row >= rows_ || s.col >= cols_) {
    throw std::out_of_range("site (" + std::to_string(s.row) + "," + std::to_string(s.col) +
                            ") outside lattice");
  }
  return s.col * rows_ + s.row;
}

double Lattice::offset_distance(std::size_t d_row, std::size_t d_col, Metric metric) const {
  const double dr = static_cast<double>(d_row);
  const double dc = static_cast<double>(d_col);
  double d;
  if (metric.is_l1()) {
    d = dr + dc;
  } else if (metric.is_l2()) {
    d = std::hypot(dr, dc);
  } else {
    if (!(metric.p >= 1.0)) {
      throw std::invalid_argument("L_p metric requires p >= 1");
    }
    if (std::isinf(metric.p)) {
      d = std::max(dr, dc);
    } else {
      d = std::pow(std::pow(dr, metric.p) + std::pow(dc, metric.p), 1.0 / metric.p);
    }
  }
  return d * spacing_;
}

double Lattice::distance(std::size_t i, std::size_t j, Metric metric) const {
  const Site a = site_coords(i);
  const Site b = site_coords(j);
  const std::size_t dr = a.row > b.row ? a.row - b.row : b.row - a.row;
  const std::size_t dc = a.col > b.col ? a.col - b.col : b.col - a.col;
  return offset_distance(dr, dc, metric);
}

}  // namespace qlspatial
