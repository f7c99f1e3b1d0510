#pragma once

#include <cstddef>

namespace qlspatial {

/// Order of an L_p norm. Only p = 1 and p = 2 enable structured correlation
/// paths; any p >= 1 is accepted for distances.
struct Metric {
  double p = 2.0;

  static constexpr Metric l1() { return Metric{1.0}; }
  static constexpr Metric l2() { return Metric{2.0}; }

  bool is_l1() const { return p == 1.0; }
  bool is_l2() const { return p == 2.0; }
};

/// Zero-based grid position.
struct Site {
  std::size_t row = 0;
  std::size_t col = 0;

  friend bool operator==(const Site&, const Site&) = default;
};

/// Rectangular m x n grid. Sites are indexed columnwise from zero: index k
/// sits at row k % m, column k / m, so the first column holds indices
/// 0..m-1 and the second column starts at m.
class Lattice {
 public:
  Lattice(std::size_t rows, std::size_t cols, double spacing = 1.0);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return rows_ * cols_; }
  double spacing() const { return spacing_; }

  Site site_coords(std::size_t k) const;
  std::size_t site_index(Site s) const;

  /// L_p distance between sites i and j, scaled by the spacing.
  double distance(std::size_t i, std::size_t j, Metric metric) const;

  /// Distance for a coordinate offset (d_row, d_col) in grid steps.
  double offset_distance(std::size_t d_row, std::size_t d_col, Metric metric) const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  double spacing_;
};

}  // namespace qlspatial
