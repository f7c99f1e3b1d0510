#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Dense>

namespace qlspatial {

/// N x (u+1) logistic design: first column ones, remaining columns binary.
class DesignMatrix {
 public:
  /// Throws std::invalid_argument if the first column is not all ones or
  /// any entry is outside {0, 1}.
  explicit DesignMatrix(Eigen::MatrixXd t);

  const Eigen::MatrixXd& matrix() const { return t_; }
  std::size_t rows() const { return static_cast<std::size_t>(t_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(t_.cols()); }

  /// Rank test: smallest singular value above rel_tol times the largest.
  bool full_rank(double rel_tol = 1e-10) const;

 private:
  Eigen::MatrixXd t_;
};

/// Logistic 1/(1 + exp(-eta)) evaluated without overflow for any finite eta.
double logistic(double eta);

/// theta_i = logistic(t_i . beta).
Eigen::VectorXd theta(const DesignMatrix& t, const Eigen::VectorXd& beta);

/// P_ij = t_ij theta_i (1 - theta_i); column 0 is the variance diagonal.
Eigen::MatrixXd derivative_matrix(const DesignMatrix& t, const Eigen::VectorXd& theta);

/// Rows (1, x_i) for the conditional independence model. Throws
/// std::invalid_argument on a non-binary covariate.
DesignMatrix build_conditional_design(std::span<const double> x);

/// Design [1 | covariates] for an N x u binary covariate block (u may be 0).
DesignMatrix design_with_intercept(const Eigen::MatrixXd& covariates);

}  // namespace qlspatial
