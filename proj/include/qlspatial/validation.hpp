#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qlspatial/correlation.hpp"
#include "qlspatial/simulate.hpp"

namespace qlspatial {

struct CheckResult {
  std::string name;       // what was checked
  std::string tolerance;  // threshold the check is held to
  std::string detail;     // observed values or the failure message
  bool passed = false;
};

struct ValidationConfig {
  std::size_t rows = 16;
  std::size_t cols = 16;
  Eigen::VectorXd beta0 = Eigen::Vector2d(-0.34, -0.26);
  double covariate_prob = 0.5;
  // Generating and working correlation of the coverage study.
  CorrelationModel correlation{1.0, 0.39988019703698733, Metric::l2()};
  // Correlation of the normality study. Calibrated L1 fields can leave the
  // PD cone, so this study opts into shrinkage and standardizes with the
  // realized binary covariance.
  CorrelationModel normality_correlation{1.0, 0.4, Metric::l1()};
  std::uint64_t seed = 1;
  std::size_t normality_replicates = 2000;
  std::size_t coverage_replicates = 500;
  std::size_t max_bound_side = 20;
  std::size_t moment_pmfs = 200;
};

/// Structured Kronecker inverse vs dense inverse, m, n in 2..6.
CheckResult kronecker_suite();
/// Covariance-sum bounds on square and rectangular lattices up to max side.
CheckResult covariance_bound_suite(std::size_t max_side);
/// Binary moment recursion on random joint pmfs.
CheckResult moment_recursion_suite(std::size_t pmfs, std::uint64_t seed);
/// KS normality of the standardized all-ones sum at theta = 0.5.
CheckResult normality_suite(const ValidationConfig& config);
/// Mean, Wald coverage and null rejection rate of the QL estimator. The
/// summary of the non-null study is copied to `summary` when given.
std::vector<CheckResult> coverage_suite(const ValidationConfig& config,
                                        CoverageSummary* summary = nullptr);

std::vector<CheckResult> run_validation(const ValidationConfig& config,
                                        CoverageSummary* summary = nullptr);

}  // namespace qlspatial
