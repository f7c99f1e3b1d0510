#pragma once

#include <cstddef>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "qlspatial/lattice.hpp"

namespace qlspatial {

/// Exponential correlation a * rho^d between distinct sites, 1 on the diagonal.
struct CorrelationModel {
  double a = 1.0;
  double rho = 0.0;
  Metric metric = Metric::l1();

  /// Throws std::invalid_argument unless 0 < a <= 1, 0 <= rho <= 1, a*rho <= 1.
  void validate() const;

  /// Correlation between two distinct sites at distance d.
  double at_distance(double d) const;
};

enum class CorrelationStructure {
  kronecker_l1_unit_a,  // Gamma = Omega_n (x) Omega_m, inverse is sparse
  dense,
};

/// Tridiagonal inverse of the AR(1) matrix (Omega_n)_ij = rho^|i-j|.
Eigen::MatrixXd omega_inverse(std::size_t n, double rho);

/// Omega_n^{-1} (x) Omega_m^{-1} for the a = 1, L1 model. Each row holds at
/// most nine nonzeros. Lattice spacing enters through rho^spacing.
Eigen::SparseMatrix<double> gamma_inverse_structured(const Lattice& lattice,
                                                     const CorrelationModel& model);

/// Correlation matrix over lattice sites with a cached solver.
///
/// The dense matrix is always available. Solves go through the sparse
/// Kronecker inverse when the structure allows it and through a cached
/// Cholesky factor otherwise. Immutable after construction.
class CorrelationMatrix {
 public:
  /// Builds Gamma for the model. Throws NotPositiveDefinite naming the first
  /// failing pivot if the matrix is not SPD.
  static CorrelationMatrix build(const Lattice& lattice, const CorrelationModel& model);

  /// Identity correlation (independence) on n sites.
  static CorrelationMatrix identity(std::size_t n);

  /// Wraps an arbitrary symmetric unit-diagonal matrix.
  static CorrelationMatrix from_dense(Eigen::MatrixXd gamma);

  const Eigen::MatrixXd& dense() const { return gamma_; }
  CorrelationStructure structure() const { return structure_; }
  std::size_t size() const { return static_cast<std::size_t>(gamma_.rows()); }

  /// Solves Gamma x = rhs for one or more right-hand sides.
  Eigen::MatrixXd solve(const Eigen::Ref<const Eigen::MatrixXd>& rhs) const;

 private:
  CorrelationMatrix() = default;

  Eigen::MatrixXd gamma_;
  CorrelationStructure structure_ = CorrelationStructure::dense;
  Eigen::SparseMatrix<double> inverse_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// Dense Gamma_a(rho; L_p) without the PD check.
Eigen::MatrixXd gamma_matrix(const Lattice& lattice, const CorrelationModel& model);

/// Factorizes an SPD matrix or throws NotPositiveDefinite with the index and
/// value of the first non-positive pivot.
Eigen::LLT<Eigen::MatrixXd> factorize_spd(const Eigen::MatrixXd& m, const char* what);

struct CovarianceMatrix {
  Eigen::MatrixXd v;      // Sigma^{1/2} Gamma Sigma^{1/2}
  Eigen::VectorXd sigma;  // sqrt(theta (1 - theta))
};

CovarianceMatrix covariance_from_theta(const CorrelationMatrix& gamma,
                                       const Eigen::VectorXd& theta);

struct CovarianceSumBound {
  double sum = 0.0;
  double bound = 0.0;
  bool holds = true;
};

/// Sum over i != j of cov(Z_i, Z_j) at the worst-case variance 1/4, against
/// aN(2rho - rho^2)/(1 - rho)^2 for L1 or aN(2rho/(1 - rho) + (pi/2)/log(rho)^2)
/// for L2. rho = 0 holds trivially; rho = 1 is rejected.
CovarianceSumBound check_covariance_sum_bound(const Lattice& lattice,
                                              const CorrelationModel& model);

// Entrywise comparisons used to check the inverse ordering and metric
// ordering of the exponential correlation family. A "gap" is the minimum
// entry of the difference, so an ordering holds when its gap >= -tolerance.

struct InverseOrdering {
  double upper_gap = 0.0;  // min entry of (1/a) Gamma_1^{-1} - Gamma_a^{-1}
  double lower_gap = 0.0;  // min entry of Gamma_a^{-1} - Gamma_1^{-1}
  bool holds(double tolerance) const {
    return upper_gap >= -tolerance && lower_gap >= -tolerance;
  }
};

InverseOrdering check_inverse_ordering(const Lattice& lattice, double a, double rho);

/// Minimum entry of Gamma_a(rho; L2) - Gamma_a(rho; L1).
double metric_ordering_gap(const Lattice& lattice, double a, double rho);

struct MaxInverseEntry {
  double unit_a = 0.0;    // rho* = max |(Gamma_1^{-1})_ij|
  double general = 0.0;   // max |(Gamma_a^{-1})_ij|
};

MaxInverseEntry max_inverse_entries(const Lattice& lattice, double a, double rho);

}  // namespace qlspatial
