#include "qlspatial/glm.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/SVD>

namespace qlspatial {

DesignMatrix::DesignMatrix(Eigen::MatrixXd t) : t_(std::move(t)) {
  if (t_.rows() == 0 || t_.cols() == 0) {
    throw std::invalid_argument("design matrix must be nonempty");
  }
  if ((t_.col(0).array() != 1.0).any()) {
    throw std::invalid_argument("design matrix first column must be all ones");
  }
  for (Eigen::Index j = 1; j < t_.cols(); ++j) {
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      const double v = t_(i, j);
      if (v != 0.0 && v != 1.0) {
        throw std::invalid_argument("design entry (" + std::to_string(i) + "," +
                                    std::to_string(j) + ") is not binary");
      }
    }
  }
}

bool DesignMatrix::full_rank(double rel_tol) const {
  if (t_.rows() < t_.cols()) return false;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(t_);
  const auto& s = svd.singularValues();
  return s(s.size() - 1) > rel_tol * s(0);
}

double logistic(double eta) {
  if (eta >= 0.0) {
    return 1.0 / (1.0 + std::exp(-eta));
  }
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

Eigen::VectorXd theta(const DesignMatrix& t, const Eigen::VectorXd& beta) {
  if (static_cast<std::size_t>(beta.size()) != t.cols()) {
    throw std::invalid_argument("theta: beta has " + std::to_string(beta.size()) +
                                " entries, design has " + std::to_string(t.cols()) + " columns");
  }
  const Eigen::VectorXd eta = t.matrix() * beta;
  return eta.unaryExpr([](double e) { return logistic(e); });
}

Eigen::MatrixXd derivative_matrix(const DesignMatrix& t, const Eigen::VectorXd& theta) {
  if (static_cast<std::size_t>(theta.size()) != t.rows()) {
    throw std::invalid_argument("derivative_matrix: theta length does not match design rows");
  }
  const Eigen::VectorXd var = theta.array() * (1.0 - theta.array());
  return var.asDiagonal() * t.matrix();
}

DesignMatrix build_conditional_design(std::span<const double> x) {
  Eigen::MatrixXd t(static_cast<Eigen::Index>(x.size()), 2);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != 0.0 && x[i] != 1.0) {
      throw std::invalid_argument("covariate value at site " + std::to_string(i) +
                                  " is not 0 or 1");
    }
    t(static_cast<Eigen::Index>(i), 0) = 1.0;
    t(static_cast<Eigen::Index>(i), 1) = x[i];
  }
  return DesignMatrix(std::move(t));
}

DesignMatrix design_with_intercept(const Eigen::MatrixXd& covariates) {
  Eigen::MatrixXd t(covariates.rows(), covariates.cols() + 1);
  t.col(0).setOnes();
  t.rightCols(covariates.cols()) = covariates;
  return DesignMatrix(std::move(t));
}

}  // namespace qlspatial
