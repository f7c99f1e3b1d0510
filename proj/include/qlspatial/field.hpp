#pragma once

#include <cstddef>

#include <Eigen/Dense>

namespace qlspatial {

/// 0/1 responses in lattice (columnwise) site order.
class BinaryField {
 public:
  BinaryField() = default;
  /// Throws std::invalid_argument if any value is not exactly 0 or 1.
  explicit BinaryField(Eigen::VectorXd values);

  const Eigen::VectorXd& values() const { return values_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  double operator[](std::size_t i) const { return values_(static_cast<Eigen::Index>(i)); }

  bool is_constant() const;

  friend bool operator==(const BinaryField& a, const BinaryField& b) {
    return a.values_.size() == b.values_.size() && a.values_ == b.values_;
  }

 private:
  Eigen::VectorXd values_;
};

}  // namespace qlspatial
