#include "qlspatial/field.hpp"

#include <stdexcept>
#include <string>

namespace qlspatial {

BinaryField::BinaryField(Eigen::VectorXd values) : values_(std::move(values)) {
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    if (values_(i) != 0.0 && values_(i) != 1.0) {
      throw std::invalid_argument("binary field value at site " + std::to_string(i) +
                                  " is not 0 or 1");
    }
  }
}

bool BinaryField::is_constant() const {
  return values_.size() == 0 || (values_.array() == values_(0)).all();
}

}  // namespace qlspatial
