#include "qlspatial/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>

#include "qlspatial/distributions.hpp"
#include "qlspatial/error.hpp"

namespace qlspatial {

namespace {

void check_margin(double theta) {
  if (!(theta > 0.0 && theta < 1.0)) {
    throw std::invalid_argument("margin must lie in (0, 1), got " + std::to_string(theta));
  }
}

double p11_to_corr(double p11, double ti, double tj) {
  return (p11 - ti * tj) / std::sqrt(ti * (1.0 - ti) * tj * (1.0 - tj));
}

}  // namespace

CorrelationBounds frechet_bounds(double theta_i, double theta_j) {
  check_margin(theta_i);
  check_margin(theta_j);
  return {p11_to_corr(std::max(0.0, theta_i + theta_j - 1.0), theta_i, theta_j),
          p11_to_corr(std::min(theta_i, theta_j), theta_i, theta_j)};
}

double dichotomized_correlation(double theta_i, double theta_j, double r) {
  check_margin(theta_i);
  check_margin(theta_j);
  if (r >= 1.0) return frechet_bounds(theta_i, theta_j).upper;
  if (r <= -1.0) return frechet_bounds(theta_i, theta_j).lower;
  const double zi = normal_quantile(1.0 - theta_i);
  const double zj = normal_quantile(1.0 - theta_j);
  return p11_to_corr(bvn_upper_orthant(zi, zj, r), theta_i, theta_j);
}

double tetrachoric_latent_corr(double theta_i, double theta_j, double target) {
  const CorrelationBounds bounds = frechet_bounds(theta_i, theta_j);
  if (!std::isfinite(target) || target < bounds.lower - 1e-12 || target > bounds.upper + 1e-12) {
    throw InfeasibleCorrelation("binary correlation " + std::to_string(target) +
                                    " is outside the attainable interval [" +
                                    std::to_string(bounds.lower) + ", " +
                                    std::to_string(bounds.upper) + "]",
                                bounds.lower, bounds.upper);
  }
  if (target == 0.0) {
    return 0.0;
  }
  // r -> corr is increasing on [-1, 1].
  double lo = -1.0;
  double hi = 1.0;
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    if (dichotomized_correlation(theta_i, theta_j, mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t replicate) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(replicate),
                    static_cast<std::uint32_t>(replicate >> 32)};
  std::uint32_t words[2];
  seq.generate(std::begin(words), std::end(words));
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

Eigen::MatrixXd random_covariate(std::size_t sites, double prob, std::uint64_t seed) {
  if (!(prob >= 0.0 && prob <= 1.0)) {
    throw std::invalid_argument("covariate probability must lie in [0, 1]");
  }
  std::mt19937_64 rng(replicate_seed(seed, 0xC0FFEEu));
  std::bernoulli_distribution coin(prob);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(sites), 1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, 0) = coin(rng) ? 1.0 : 0.0;
  return x;
}

namespace {

DesignMatrix simulation_design(const SimulationConfig& config) {
  const auto n = static_cast<Eigen::Index>(config.lattice.size());
  Eigen::MatrixXd covariates = config.covariates;
  if (covariates.size() == 0) {
    covariates.resize(n, 0);
  }
  if (covariates.rows() != n) {
    throw std::invalid_argument("covariate rows do not match lattice size");
  }
  if (config.beta0.size() != covariates.cols() + 1) {
    throw std::invalid_argument("beta0 needs one entry per covariate plus an intercept");
  }
  return design_with_intercept(covariates);
}

}  // namespace

FieldSimulator::FieldSimulator(const SimulationConfig& config)
    : design_(simulation_design(config)), seed_(config.seed) {
  theta_ = qlspatial::theta(design_, config.beta0);
  const Eigen::Index n = theta_.size();
  thresholds_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    thresholds_(i) = normal_quantile(1.0 - theta_(i));
  }

  binary_ = gamma_matrix(config.lattice, config.correlation);
  const Eigen::MatrixXd& target = binary_;
  // Binary designs give few distinct (theta_i, theta_j, gamma) triples.
  std::map<std::tuple<double, double, double>, double> calibrated;
  latent_ = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double lo = std::min(theta_(i), theta_(j));
      const double hi = std::max(theta_(i), theta_(j));
      const auto key = std::make_tuple(lo, hi, target(i, j));
      auto it = calibrated.find(key);
      if (it == calibrated.end()) {
        it = calibrated.emplace(key, tetrachoric_latent_corr(lo, hi, target(i, j))).first;
      }
      latent_(i, j) = it->second;
      latent_(j, i) = it->second;
    }
  }

  Eigen::LLT<Eigen::MatrixXd> llt(latent_);
  if (llt.info() != Eigen::Success) {
    if (!config.allow_shrinkage) {
      factorize_spd(latent_, "latent Gaussian correlation matrix");  // throws with pivot
    }
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
    double lo = 0.0;
    double hi = 1.0;
    while (hi - lo > 1e-6) {
      const double mid = 0.5 * (lo + hi);
      if (Eigen::LLT<Eigen::MatrixXd>((1.0 - mid) * latent_ + mid * identity).info() ==
          Eigen::Success) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    shrinkage_ = hi;
    latent_ = (1.0 - hi) * latent_ + hi * identity;
    llt.compute(latent_);
    std::map<std::tuple<double, double, double>, double> realized;
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = j + 1; i < n; ++i) {
        const auto key = std::make_tuple(theta_(i), theta_(j), latent_(i, j));
        auto it = realized.find(key);
        if (it == realized.end()) {
          it = realized.emplace(key, dichotomized_correlation(theta_(i), theta_(j), latent_(i, j)))
                   .first;
        }
        binary_(i, j) = it->second;
        binary_(j, i) = it->second;
      }
    }
  }
  factor_ = llt.matrixL();
}

BinaryField FieldSimulator::draw(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd noise(theta_.size());
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise(i) = normal(rng);
  const Eigen::VectorXd latent = factor_.triangularView<Eigen::Lower>() * noise;
  Eigen::VectorXd y(theta_.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = latent(i) > thresholds_(i) ? 1.0 : 0.0;
  return BinaryField(std::move(y));
}

BinaryField simulate_field(const SimulationConfig& config) {
  return FieldSimulator(config).draw(config.seed);
}

JointPmf::JointPmf(std::size_t k, std::vector<double> probs) : k_(k), probs_(std::move(probs)) {
  if (k == 0 || k > max_variables) {
    throw std::invalid_argument("joint pmf supports 1 to 12 variables");
  }
  if (probs_.size() != (std::size_t{1} << k)) {
    throw std::invalid_argument("joint pmf needs 2^k probabilities");
  }
  if (std::any_of(probs_.begin(), probs_.end(), [](double p) { return !(p >= 0.0); })) {
    throw std::invalid_argument("joint pmf probabilities must be nonnegative");
  }
  const double total = std::accumulate(probs_.begin(), probs_.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("joint pmf probabilities must sum to 1");
  }
}

double JointPmf::marginal(std::size_t i) const {
  if (i >= k_) throw std::out_of_range("joint pmf variable index out of range");
  double p = 0.0;
  for (std::size_t outcome = 0; outcome < probs_.size(); ++outcome) {
    if ((outcome >> i) & 1u) p += probs_[outcome];
  }
  return p;
}

double moment_oracle(const JointPmf& pmf, std::span<const int> powers) {
  const std::size_t k = pmf.variables();
  if (powers.size() != k) {
    throw std::invalid_argument("moment_oracle: need one exponent per variable");
  }
  if (std::any_of(powers.begin(), powers.end(), [](int p) { return p < 0; })) {
    throw std::invalid_argument("moment_oracle: exponents must be nonnegative");
  }
  std::vector<double> theta(k);
  for (std::size_t i = 0; i < k; ++i) theta[i] = pmf.marginal(i);

  double expectation = 0.0;
  const auto& probs = pmf.probabilities();
  for (std::size_t outcome = 0; outcome < probs.size(); ++outcome) {
    if (probs[outcome] == 0.0) continue;
    double term = probs[outcome];
    for (std::size_t i = 0; i < k; ++i) {
      const double z = static_cast<double>((outcome >> i) & 1u) - theta[i];
      term *= std::pow(z, powers[i]);
    }
    expectation += term;
  }
  return expectation;
}

NormalityCheck mc_normality_check(const SimulationConfig& config, const Eigen::VectorXd& weights) {
  if (config.replicates < 1000) {
    throw std::invalid_argument("normality check needs at least 1000 replicates");
  }
  const FieldSimulator simulator(config);
  if (weights.size() != simulator.theta().size()) {
    throw std::invalid_argument("weight vector length does not match lattice size");
  }
  const CovarianceMatrix cov = covariance_from_theta(
      CorrelationMatrix::from_dense(simulator.binary_correlation()), simulator.theta());
  const double variance = weights.dot(cov.v * weights);
  if (!(variance > 0.0)) {
    throw std::invalid_argument("weight vector gives a degenerate (zero variance) sum");
  }
  const double scale = 1.0 / std::sqrt(variance);

  NormalityCheck out;
  out.replicates = config.replicates;
  out.shrinkage = simulator.shrinkage();
  out.standardized.reserve(config.replicates);
  for (std::size_t r = 0; r < config.replicates; ++r) {
    const BinaryField field = simulator.replicate(r);
    out.standardized.push_back(weights.dot(field.values() - simulator.theta()) * scale);
  }
  out.ks_statistic = ks_distance_standard_normal(out.standardized);
  out.critical_value = ks_critical_value(0.01, static_cast<double>(config.replicates));
  out.pass = out.ks_statistic < out.critical_value;
  return out;
}

CoverageSummary mc_coverage(const SimulationConfig& config, double nominal,
                            const FitOptions& options) {
  if (config.replicates < 500) {
    throw std::invalid_argument("coverage study needs at least 500 replicates");
  }
  if (!(nominal > 0.0 && nominal < 1.0)) {
    throw std::invalid_argument("nominal level must lie in (0, 1)");
  }
  const FieldSimulator simulator(config);
  const CorrelationMatrix working =
      simulator.shrinkage() > 0.0 ? CorrelationMatrix::from_dense(simulator.binary_correlation())
                                  : CorrelationMatrix::build(config.lattice, config.correlation);
  const double z = normal_quantile(1.0 - (1.0 - nominal) / 2.0);
  const Eigen::Index p = config.beta0.size();

  CoverageSummary out;
  out.nominal = nominal;
  out.rows.reserve(config.replicates);
  Eigen::VectorXd covered = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(p);
  std::size_t rejections = 0;
  for (std::size_t r = 0; r < config.replicates; ++r) {
    ReplicateFit row;
    row.replicate = r;
    const BinaryField field = simulator.replicate(r);
    try {
      const FitResult result = fit(simulator.design(), field.values(), working, options);
      row.ok = true;
      row.beta_hat = result.beta_hat;
      row.std_error = result.cov_hat.diagonal().cwiseSqrt();
      row.wald_last = wald_test(result, static_cast<std::size_t>(p - 1)).statistic;
    } catch (const FitError& e) {
      row.failure = to_string(e.kind());
    }
    if (row.ok) {
      ++out.fitted;
      for (Eigen::Index j = 0; j < p; ++j) {
        if (std::abs(row.beta_hat(j) - config.beta0(j)) <= z * row.std_error(j)) covered(j) += 1.0;
      }
      sum += row.beta_hat;
      sum_sq += row.beta_hat.cwiseAbs2();
      if (chisq1_tail(row.wald_last) < 1.0 - nominal) ++rejections;
    } else {
      ++out.failed;
    }
    out.rows.push_back(std::move(row));
  }
  if (out.fitted < 2) {
    throw Error("coverage study: fewer than two replicates could be fitted");
  }
  const double fitted = static_cast<double>(out.fitted);
  out.coverage = covered / fitted;
  out.mean_beta = sum / fitted;
  const Eigen::VectorXd var =
      ((sum_sq - fitted * out.mean_beta.cwiseAbs2()) / (fitted - 1.0)).cwiseMax(0.0);
  out.mc_std_error = (var / fitted).cwiseSqrt();
  if (p >= 2 && config.beta0(p - 1) == 0.0) {
    out.rejection_rate = static_cast<double>(rejections) / fitted;
  }
  return out;
}

}  // namespace qlspatial
