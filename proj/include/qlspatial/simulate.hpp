#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "qlspatial/correlation.hpp"
#include "qlspatial/estimator.hpp"
#include "qlspatial/field.hpp"
#include "qlspatial/glm.hpp"
#include "qlspatial/lattice.hpp"

namespace qlspatial {

/// Fréchet interval for corr(Y_i, Y_j) of Bernoulli(theta_i), Bernoulli(theta_j).
struct CorrelationBounds {
  double lower = -1.0;
  double upper = 1.0;
};
CorrelationBounds frechet_bounds(double theta_i, double theta_j);

/// Binary correlation of a Gaussian pair with latent correlation r
/// dichotomized so that the margins are theta_i and theta_j.
double dichotomized_correlation(double theta_i, double theta_j, double r);

/// Latent correlation r with dichotomized_correlation(theta_i, theta_j, r)
/// equal to target within 1e-7, by bisection. Throws InfeasibleCorrelation
/// with the attainable interval if the target lies outside the Fréchet bounds.
double tetrachoric_latent_corr(double theta_i, double theta_j, double target);

struct SimulationConfig {
  Lattice lattice{16, 16};
  Eigen::VectorXd beta0 = Eigen::Vector2d(-0.34, -0.26);
  /// N x u binary covariates in site order; u = beta0.size() - 1.
  Eigen::MatrixXd covariates;
  CorrelationModel correlation{1.0, 0.4, Metric::l1()};
  std::uint64_t seed = 1;
  std::size_t replicates = 500;
  /// Permit (1 - eps) R + eps I repair when the latent matrix is not PD.
  bool allow_shrinkage = false;
};

/// Binary covariate column of i.i.d. Bernoulli(prob) draws.
Eigen::MatrixXd random_covariate(std::size_t sites, double prob, std::uint64_t seed);

/// seed for replicate i derived from the master seed.
std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t replicate);

/// Dichotomized Gaussian generator. Calibrates every site pair once, factors
/// the latent correlation matrix, and then draws fields cheaply.
class FieldSimulator {
 public:
  /// Throws InfeasibleCorrelation or NotPositiveDefinite (unless shrinkage
  /// is allowed).
  explicit FieldSimulator(const SimulationConfig& config);

  BinaryField draw(std::uint64_t seed) const;
  BinaryField replicate(std::size_t i) const { return draw(replicate_seed(seed_, i)); }

  const DesignMatrix& design() const { return design_; }
  const Eigen::VectorXd& theta() const { return theta_; }
  const Eigen::MatrixXd& latent_correlation() const { return latent_; }
  /// Shrinkage weight applied to reach PD; 0 when none was needed.
  double shrinkage() const { return shrinkage_; }
  /// Pairwise binary correlations the generator actually delivers: the
  /// target when no shrinkage was needed, recomputed from the shrunk latent
  /// matrix otherwise.
  const Eigen::MatrixXd& binary_correlation() const { return binary_; }

 private:
  DesignMatrix design_;
  Eigen::VectorXd theta_;
  Eigen::VectorXd thresholds_;
  Eigen::MatrixXd latent_;
  Eigen::MatrixXd factor_;  // lower Cholesky factor of latent_
  Eigen::MatrixXd binary_;
  double shrinkage_ = 0.0;
  std::uint64_t seed_;
};

BinaryField simulate_field(const SimulationConfig& config);

/// Joint probabilities of k binary variables; bit i of an outcome index is
/// the value of variable i.
class JointPmf {
 public:
  static constexpr std::size_t max_variables = 12;

  /// Throws std::invalid_argument if probs.size() != 2^k, k > 12, any entry
  /// is negative, or the total differs from 1 by more than 1e-12.
  JointPmf(std::size_t k, std::vector<double> probs);

  std::size_t variables() const { return k_; }
  const std::vector<double>& probabilities() const { return probs_; }
  double marginal(std::size_t i) const;

 private:
  std::size_t k_;
  std::vector<double> probs_;
};

/// Exact E[prod_i (Y_i - theta_i)^{p_i}] by enumerating all 2^k outcomes.
double moment_oracle(const JointPmf& pmf, std::span<const int> powers);

struct NormalityCheck {
  double ks_statistic = 0.0;
  double critical_value = 0.0;
  bool pass = false;
  std::size_t replicates = 0;
  double shrinkage = 0.0;            // latent shrinkage used by the generator
  std::vector<double> standardized;  // one per replicate
};

/// Standardized weighted sums a^T (Y - theta) / sqrt(a^T V a) over
/// replicates, compared to N(0, 1) by KS at the 1% level. Needs >= 1000
/// replicates.
NormalityCheck mc_normality_check(const SimulationConfig& config, const Eigen::VectorXd& weights);

struct ReplicateFit {
  std::size_t replicate = 0;
  bool ok = false;
  std::string failure;
  Eigen::VectorXd beta_hat;
  Eigen::VectorXd std_error;
  double wald_last = 0.0;  // Wald statistic of the last coefficient
};

struct CoverageSummary {
  double nominal = 0.95;
  std::size_t fitted = 0;
  std::size_t failed = 0;
  Eigen::VectorXd coverage;
  Eigen::VectorXd mean_beta;
  Eigen::VectorXd mc_std_error;  // sd(beta_hat) / sqrt(fitted)
  /// Wald rejection rate of the last coefficient at 1 - nominal; set only
  /// when its true value is zero.
  std::optional<double> rejection_rate;
  std::vector<ReplicateFit> rows;
};

/// Fits every replicate with the generating correlation as working
/// correlation and summarizes Wald interval coverage. Needs >= 500
/// replicates. Failed fits are counted and excluded.
CoverageSummary mc_coverage(const SimulationConfig& config, double nominal,
                            const FitOptions& options = {});

}  // namespace qlspatial
