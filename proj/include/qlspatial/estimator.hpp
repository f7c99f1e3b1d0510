#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qlspatial/correlation.hpp"
#include "qlspatial/error.hpp"
#include "qlspatial/glm.hpp"

namespace qlspatial {

/// U(beta) = P^T V^{-1} (y - theta) with V = Sigma^{1/2} Gamma Sigma^{1/2}
/// and unit dispersion. V^{-1} is applied as Sigma^{-1/2} Gamma^{-1}
/// Sigma^{-1/2}, never formed. y may be any real vector of length N.
Eigen::VectorXd quasi_score(const DesignMatrix& t, const Eigen::VectorXd& beta,
                            const Eigen::VectorXd& y, const CorrelationMatrix& gamma);

/// I(beta) = P^T V^{-1} P.
Eigen::MatrixXd information(const DesignMatrix& t, const Eigen::VectorXd& beta,
                            const CorrelationMatrix& gamma);

struct FitOptions {
  /// Defaults to the independence (Gamma = I) fit, falling back to zeros.
  std::optional<Eigen::VectorXd> beta_init;
  double tol = 1e-8;  // on ||U||_inf
  int max_iter = 50;
  /// Halve the step while ||U||_inf increases (at most 30 halvings).
  bool damping = false;
  bool check_separation = true;
  double divergence_bound = 1e3;  // on ||beta||_inf
};

struct IterationRecord {
  Eigen::VectorXd beta;
  double score_norm = 0.0;  // ||U(beta)||_inf
};

struct FitResult {
  Eigen::VectorXd beta_hat;
  Eigen::MatrixXd cov_hat;  // I(beta_hat)^{-1}
  int iterations = 0;
  std::vector<IterationRecord> trace;
  bool converged = false;
};

enum class FitFailure {
  rank_deficient,
  separation,
  divergence,
  max_iterations,
  singular_information,
};

const char* to_string(FitFailure kind);

class FitError : public Error {
 public:
  FitError(FitFailure kind, const std::string& what, std::vector<IterationRecord> trace = {})
      : Error(what), kind_(kind), trace_(std::move(trace)) {}

  FitFailure kind() const noexcept { return kind_; }
  const std::vector<IterationRecord>& trace() const noexcept { return trace_; }

 private:
  FitFailure kind_;
  std::vector<IterationRecord> trace_;
};

/// Newton-Raphson on the quasi-score: beta <- beta + I^{-1} U until
/// ||U||_inf <= tol. Throws FitError on a degenerate design, separation,
/// divergence, iteration exhaustion, or a singular information matrix.
FitResult fit(const DesignMatrix& t, const Eigen::VectorXd& y, const CorrelationMatrix& gamma,
              const FitOptions& options = {});

/// True when the design is saturated (one parameter per distinct row) and
/// some covariate class has all responses equal, so no finite root exists.
bool has_separation(const DesignMatrix& t, const Eigen::VectorXd& y);

struct WaldTest {
  double statistic = 0.0;
  int df = 1;
  double p_value = 1.0;
};

/// beta_j^2 / cov_jj against chi-squared(1).
WaldTest wald_test(const FitResult& fit, std::size_t j);

/// P(chi2_1 > x) = erfc(sqrt(x / 2)).
double chisq1_tail(double x);

}  // namespace qlspatial
