#include "qlspatial/validation.hpp"

#include <cmath>
#include <exception>
#include <optional>
#include <stdexcept>
#include <random>
#include <sstream>

#include "qlspatial/simulate.hpp"

namespace qlspatial {

namespace {

template <typename Fn>
CheckResult guarded(std::string name, std::string tolerance, Fn&& body) {
  CheckResult out{std::move(name), std::move(tolerance), {}, false};
  try {
    body(out);
  } catch (const std::exception& e) {
    out.passed = false;
    out.detail = std::string("error: ") + e.what();
  }
  return out;
}

SimulationConfig simulation_config(const ValidationConfig& config, std::size_t replicates) {
  SimulationConfig sim;
  sim.lattice = Lattice(config.rows, config.cols);
  sim.beta0 = config.beta0;
  if (config.beta0.size() > 1) {
    sim.covariates = random_covariate(sim.lattice.size(), config.covariate_prob, config.seed);
  }
  sim.correlation = config.correlation;
  sim.seed = config.seed;
  sim.replicates = replicates;
  return sim;
}

}  // namespace

CheckResult kronecker_suite() {
  return guarded("structured inverse equals dense inverse (m,n in 2..6, rho in .1..9)",
                 "max abs error <= 1e-10", [](CheckResult& out) {
                   double worst = 0.0;
                   for (std::size_t m = 2; m <= 6; ++m) {
                     for (std::size_t n = 2; n <= 6; ++n) {
                       for (double rho : {0.1, 0.3, 0.5, 0.7, 0.9}) {
                         const Lattice lat(m, n);
                         const CorrelationModel model{1.0, rho, Metric::l1()};
                         const Eigen::MatrixXd dense = gamma_matrix(lat, model).inverse();
                         const Eigen::MatrixXd structured =
                             Eigen::MatrixXd(gamma_inverse_structured(lat, model));
                         worst = std::max(worst, (dense - structured).cwiseAbs().maxCoeff());
                       }
                     }
                   }
                   out.passed = worst <= 1e-10;
                   std::ostringstream s;
                   s << "max abs error " << worst;
                   out.detail = s.str();
                 });
}

CheckResult covariance_bound_suite(std::size_t max_side) {
  return guarded("covariance double-sum bounds, L1 and L2, lattices up to " +
                     std::to_string(max_side) + "x" + std::to_string(max_side),
                 "sum <= bound", [max_side](CheckResult& out) {
                   std::size_t checked = 0;
                   double worst_ratio = 0.0;
                   bool ok = true;
                   for (std::size_t m = 2; m <= max_side; m += 3) {
                     for (std::size_t n : {m, max_side}) {
                       for (double a : {0.25, 0.5, 1.0}) {
                         for (int t = 1; t <= 9; ++t) {
                           for (Metric metric : {Metric::l1(), Metric::l2()}) {
                             const auto res = check_covariance_sum_bound(
                                 Lattice(m, n), CorrelationModel{a, 0.1 * t, metric});
                             ok = ok && res.holds;
                             worst_ratio = std::max(worst_ratio, res.sum / res.bound);
                             ++checked;
                           }
                         }
                       }
                     }
                   }
                   out.passed = ok;
                   std::ostringstream s;
                   s << checked << " configurations, largest sum/bound " << worst_ratio;
                   out.detail = s.str();
                 });
}

CheckResult moment_recursion_suite(std::size_t pmfs, std::uint64_t seed) {
  return guarded("E[Z1^2 W] = Var(Z1) E[W] + (1 - 2 theta1) E[Z1 W] on random pmfs",
                 "abs difference <= 1e-12", [pmfs, seed](CheckResult& out) {
                   std::mt19937_64 rng(seed);
                   std::uniform_int_distribution<std::size_t> kdist(2, 4);
                   std::uniform_int_distribution<int> pdist(0, 4);
                   std::uniform_real_distribution<double> udist(0.0, 1.0);
                   double worst = 0.0;
                   for (std::size_t t = 0; t < pmfs; ++t) {
                     const std::size_t k = kdist(rng);
                     std::vector<double> probs(std::size_t{1} << k);
                     double total = 0.0;
                     for (double& p : probs) total += (p = udist(rng));
                     for (double& p : probs) p /= total;
                     const JointPmf pmf(k, probs);
                     std::vector<int> powers(k), rest(k), first(k);
                     for (std::size_t i = 1; i < k; ++i) powers[i] = rest[i] = first[i] = pdist(rng);
                     powers[0] = 2;
                     rest[0] = 0;
                     first[0] = 1;
                     const double theta = pmf.marginal(0);
                     const double lhs = moment_oracle(pmf, powers);
                     const double rhs = theta * (1.0 - theta) * moment_oracle(pmf, rest) +
                                        (1.0 - 2.0 * theta) * moment_oracle(pmf, first);
                     worst = std::max(worst, std::abs(lhs - rhs));
                   }
                   out.passed = worst <= 1e-12;
                   std::ostringstream s;
                   s << pmfs << " pmfs, max abs difference " << worst;
                   out.detail = s.str();
                 });
}

CheckResult normality_suite(const ValidationConfig& config) {
  return guarded("standardized all-ones sum is N(0,1) (KS, " +
                     std::to_string(config.normality_replicates) + " replicates, theta = 0.5)",
                 "KS distance < 1% asymptotic critical value", [&config](CheckResult& out) {
                   ValidationConfig centered = config;
                   centered.beta0 = Eigen::VectorXd::Zero(1);
                   centered.correlation = config.normality_correlation;
                   SimulationConfig sim = simulation_config(centered, config.normality_replicates);
                   sim.allow_shrinkage = true;
                   const auto n = static_cast<Eigen::Index>(sim.lattice.size());
                   const NormalityCheck res =
                       mc_normality_check(sim, Eigen::VectorXd::Ones(n));
                   out.passed = res.pass;
                   std::ostringstream s;
                   s << "KS " << res.ks_statistic << " vs critical " << res.critical_value;
                   if (res.shrinkage > 0.0) s << "; latent shrinkage " << res.shrinkage;
                   out.detail = s.str();
                 });
}

std::vector<CheckResult> coverage_suite(const ValidationConfig& config,
                                        CoverageSummary* summary) {
  std::vector<CheckResult> out;
  std::optional<CoverageSummary> alt;
  std::optional<CoverageSummary> null;
  std::string alt_error;
  std::string null_error;
  try {
    alt = mc_coverage(simulation_config(config, config.coverage_replicates), 0.95);
  } catch (const std::exception& e) {
    alt_error = e.what();
  }
  ValidationConfig null_config = config;
  if (null_config.beta0.size() > 1) null_config.beta0(null_config.beta0.size() - 1) = 0.0;
  try {
    null = mc_coverage(simulation_config(null_config, config.coverage_replicates), 0.95);
  } catch (const std::exception& e) {
    null_error = e.what();
  }

  out.push_back(guarded("mean of beta_hat near beta0", "within 3 Monte Carlo standard errors",
                        [&](CheckResult& r) {
                          if (!alt) throw std::runtime_error(alt_error);
                          std::ostringstream s;
                          bool ok = true;
                          for (Eigen::Index j = 0; j < alt->mean_beta.size(); ++j) {
                            const double z =
                                (alt->mean_beta(j) - config.beta0(j)) / alt->mc_std_error(j);
                            ok = ok && std::abs(z) <= 3.0;
                            s << "beta" << j << " mean " << alt->mean_beta(j) << " (z = " << z
                              << ") ";
                          }
                          s << "failed fits " << alt->failed;
                          r.passed = ok;
                          r.detail = s.str();
                        }));
  out.push_back(guarded("95% Wald interval coverage", "coverage in [0.92, 0.975]",
                        [&](CheckResult& r) {
                          if (!alt) throw std::runtime_error(alt_error);
                          std::ostringstream s;
                          bool ok = true;
                          for (Eigen::Index j = 0; j < alt->coverage.size(); ++j) {
                            ok = ok && alt->coverage(j) >= 0.92 && alt->coverage(j) <= 0.975;
                            s << (j > 0 ? ", " : "") << "beta" << j << ' ' << alt->coverage(j);
                          }
                          r.passed = ok;
                          r.detail = s.str();
                        }));
  if (summary != nullptr && alt) *summary = *alt;
  if (config.beta0.size() > 1) {
    out.push_back(guarded("Wald rejection rate under a zero last coefficient",
                          "rate in [0.03, 0.08] at the 5% level", [&](CheckResult& r) {
                            if (!null) throw std::runtime_error(null_error);
                            const double rate = null->rejection_rate.value_or(-1.0);
                            r.passed = rate >= 0.03 && rate <= 0.08;
                            std::ostringstream s;
                            s << "rejection rate " << rate;
                            r.detail = s.str();
                          }));
  }
  return out;
}

std::vector<CheckResult> run_validation(const ValidationConfig& config,
                                        CoverageSummary* summary) {
  std::vector<CheckResult> out;
  out.push_back(kronecker_suite());
  out.push_back(covariance_bound_suite(config.max_bound_side));
  out.push_back(moment_recursion_suite(config.moment_pmfs, config.seed));
  out.push_back(normality_suite(config));
  for (auto& r : coverage_suite(config, summary)) out.push_back(std::move(r));
  return out;
}

}  // namespace qlspatial
