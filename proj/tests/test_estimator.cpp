#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "qlspatial/correlation.hpp"
#include "qlspatial/estimator.hpp"
#include "qlspatial/glm.hpp"
#include "qlspatial/simulate.hpp"

using namespace qlspatial;

namespace {

struct DenseOracle {
  Eigen::VectorXd score;
  Eigen::MatrixXd info;
};

// Explicit V^{-1}: U = P^T V^{-1} (y - theta), I = P^T V^{-1} P.
DenseOracle dense_oracle(const Eigen::MatrixXd& t, const Eigen::VectorXd& beta,
                         const Eigen::VectorXd& y, const Eigen::MatrixXd& gamma) {
  const Eigen::VectorXd eta = t * beta;
  Eigen::VectorXd th(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) th(i) = 1.0 / (1.0 + std::exp(-eta(i)));
  const Eigen::VectorXd var = th.array() * (1.0 - th.array());
  const Eigen::VectorXd sd = var.cwiseSqrt();
  const Eigen::MatrixXd v = sd.asDiagonal() * gamma * sd.asDiagonal();
  const Eigen::MatrixXd v_inv = v.fullPivLu().inverse();
  const Eigen::MatrixXd p = var.asDiagonal() * t;
  return {p.transpose() * v_inv * (y - th), p.transpose() * v_inv * p};
}

// Ordinary logistic regression by iteratively reweighted least squares.
Eigen::VectorXd irls_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
  for (int it = 0; it < 100; ++it) {
    const Eigen::VectorXd eta = x * beta;
    Eigen::VectorXd mu(eta.size()), w(eta.size()), z(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      mu(i) = 1.0 / (1.0 + std::exp(-eta(i)));
      w(i) = mu(i) * (1.0 - mu(i));
      z(i) = eta(i) + (y(i) - mu(i)) / w(i);
    }
    const Eigen::MatrixXd xtw = x.transpose() * w.asDiagonal();
    const Eigen::VectorXd next = (xtw * x).ldlt().solve(xtw * z);
    if ((next - beta).cwiseAbs().maxCoeff() < 1e-13) return next;
    beta = next;
  }
  return beta;
}

Eigen::VectorXd random_binary(std::size_t n, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(p);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = coin(rng) ? 1.0 : 0.0;
  return v;
}

}  // namespace

TEST_CASE("quasi-score vanishes at a zero residual") {
  const Lattice lat(3, 3);
  const auto gamma = CorrelationMatrix::build(lat, {1.0, 0.5, Metric::l1()});
  std::mt19937_64 rng(1);
  const DesignMatrix t = design_with_intercept(random_binary(9, 0.5, rng));
  const Eigen::Vector2d beta(0.3, -0.8);
  const Eigen::VectorXd u = quasi_score(t, beta, theta(t, beta), gamma);
  CHECK(u.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("independence reduces to the logistic score") {
  std::mt19937_64 rng(2);
  const Eigen::VectorXd y = random_binary(40, 0.3, rng);
  const DesignMatrix t = design_with_intercept(Eigen::MatrixXd(40, 0));
  const Eigen::VectorXd beta = Eigen::VectorXd::Constant(1, -0.4);
  const double th = 1.0 / (1.0 + std::exp(0.4));
  const Eigen::VectorXd u = quasi_score(t, beta, y, CorrelationMatrix::identity(40));
  CHECK(u(0) == doctest::Approx((y.array() - th).sum()).epsilon(1e-13));

  const Eigen::MatrixXd info = information(t, Eigen::VectorXd::Zero(1),
                                           CorrelationMatrix::identity(40));
  CHECK(info(0, 0) == doctest::Approx(10.0));
}

TEST_CASE("score and information match the dense oracle") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  for (std::size_t m = 1; m <= 4; ++m) {
    for (std::size_t n = 1; n <= 4; ++n) {
      const Lattice lat(m, n);
      for (const CorrelationModel& model :
           {CorrelationModel{1.0, 0.5, Metric::l1()}, CorrelationModel{0.6, 0.7, Metric::l1()},
            CorrelationModel{1.0, 0.4, Metric::l2()}}) {
        const auto gamma = CorrelationMatrix::build(lat, model);
        Eigen::MatrixXd x(lat.size(), 2);
        x.col(0) = random_binary(lat.size(), 0.5, rng);
        x.col(1) = random_binary(lat.size(), 0.4, rng);
        const DesignMatrix t = design_with_intercept(x);
        const Eigen::Vector3d beta(normal(rng), normal(rng), normal(rng));
        const Eigen::VectorXd y = random_binary(lat.size(), 0.5, rng);
        const DenseOracle oracle = dense_oracle(t.matrix(), beta, y, gamma.dense());
        CHECK((quasi_score(t, beta, y, gamma) - oracle.score).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((information(t, beta, gamma) - oracle.info).cwiseAbs().maxCoeff() < 1e-12);
      }
    }
  }
}

TEST_CASE("information per site respects the L1 bound") {
  // (1/N) I_kl <= (9/4) rho* theta* with rho* the largest |entry| of
  // Gamma_1^{-1} and theta* the largest ratio of marginal standard deviations.
  std::mt19937_64 rng(4);
  for (std::size_t side : {4u, 8u, 12u}) {
    const Lattice lat(side, side);
    const CorrelationModel model{1.0, 0.6, Metric::l1()};
    const auto gamma = CorrelationMatrix::build(lat, model);
    const DesignMatrix t = design_with_intercept(random_binary(lat.size(), 0.5, rng));
    const Eigen::Vector2d beta(-0.34, -0.26);
    const Eigen::MatrixXd info = information(t, beta, gamma);
    const double rho_star = max_inverse_entries(lat, 1.0, model.rho).unit_a;
    const Eigen::VectorXd th = theta(t, beta);
    const Eigen::ArrayXd sd = (th.array() * (1 - th.array())).sqrt();
    const double theta_star = sd.maxCoeff() / sd.minCoeff();
    const double bound = 9.0 / 4.0 * rho_star * theta_star;
    CHECK(info.cwiseAbs().maxCoeff() / static_cast<double>(lat.size()) <= bound);
  }
}

TEST_CASE("information grows linearly in N") {
  const CorrelationModel model{1.0, 0.5, Metric::l1()};
  const Eigen::Vector2d beta(-0.34, -0.26);
  std::mt19937_64 rng(9);
  for (std::size_t side : {8u, 16u}) {
    // The wide lattice repeats the square one, so the design is comparable.
    const Eigen::VectorXd tile = random_binary(side * side, 0.5, rng);
    Eigen::VectorXd wide(2 * tile.size());
    wide << tile, tile;
    const Lattice square(side, side), rect(side, 2 * side);
    const Eigen::MatrixXd small = information(design_with_intercept(tile), beta,
                                              CorrelationMatrix::build(square, model));
    const Eigen::MatrixXd large = information(design_with_intercept(wide), beta,
                                              CorrelationMatrix::build(rect, model));
    const Eigen::ArrayXXd ratio = large.array() / small.array();
    CHECK(ratio.minCoeff() >= 1.6);
    CHECK(ratio.maxCoeff() <= 2.4);
  }
}

TEST_CASE("independent fit matches ordinary logistic regression") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::MatrixXd x(200, 2);
    x.col(0) = random_binary(200, 0.5, rng);
    x.col(1) = random_binary(200, 0.3, rng);
    const DesignMatrix t = design_with_intercept(x);
    const Eigen::VectorXd y = random_binary(200, 0.4, rng);
    const FitResult r = fit(t, y, CorrelationMatrix::identity(200));
    CHECK(r.converged);
    CHECK((r.beta_hat - irls_logistic(t.matrix(), y)).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(r.trace.back().score_norm <= 1e-8);
    // Model-based covariance is the inverse Fisher information.
    const Eigen::VectorXd th = theta(t, r.beta_hat);
    const Eigen::MatrixXd fisher =
        t.matrix().transpose() * (th.array() * (1 - th.array())).matrix().asDiagonal() *
        t.matrix();
    CHECK((r.cov_hat - fisher.inverse()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("Newton iterations contract near the root") {
  std::mt19937_64 rng(6);
  const Lattice lat(10, 10);
  const auto gamma = CorrelationMatrix::build(lat, {1.0, 0.4, Metric::l1()});
  const Eigen::VectorXd x = random_binary(lat.size(), 0.5, rng);
  Eigen::VectorXd y(lat.size());
  std::bernoulli_distribution hi(0.8), lo(0.2);
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = (x(i) == 1.0 ? hi(rng) : lo(rng)) ? 1 : 0;
  FitOptions opts;
  opts.beta_init = Eigen::VectorXd::Zero(2);
  const FitResult r = fit(design_with_intercept(x), y, gamma, opts);
  CHECK(r.converged);
  REQUIRE(r.trace.size() >= 2);
  const std::size_t first = r.trace.size() > 5 ? r.trace.size() - 5 : 0;
  for (std::size_t i = first + 1; i < r.trace.size(); ++i) {
    CHECK(r.trace[i].score_norm < r.trace[i - 1].score_norm);
  }
  CHECK(r.iterations == static_cast<int>(r.trace.size()) - 1);
}

TEST_CASE("fit failures are reported distinctly") {
  const Lattice lat(4, 4);
  const auto gamma = CorrelationMatrix::build(lat, {1.0, 0.3, Metric::l1()});
  std::mt19937_64 rng(7);
  const DesignMatrix t = design_with_intercept(random_binary(16, 0.5, rng));
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(16);

  try {
    fit(t, ones, gamma);
    FAIL("expected separation");
  } catch (const FitError& e) {
    CHECK(e.kind() == FitFailure::separation);
  }

  FitOptions no_check;
  no_check.check_separation = false;
  try {
    fit(t, ones, gamma, no_check);
    FAIL("expected divergence");
  } catch (const FitError& e) {
    CHECK(e.kind() == FitFailure::divergence);
    CHECK_FALSE(e.trace().empty());
  }

  Eigen::VectorXd y = random_binary(16, 0.5, rng);
  y(0) = 0;
  y(1) = 1;
  FitOptions one_step;
  one_step.max_iter = 0;
  one_step.beta_init = Eigen::Vector2d(3.0, -2.0);
  one_step.check_separation = false;
  try {
    fit(t, y, gamma, one_step);
    FAIL("expected max_iterations");
  } catch (const FitError& e) {
    CHECK(e.kind() == FitFailure::max_iterations);
    CHECK(e.trace().size() == 1);
  }

  const DesignMatrix degenerate = build_conditional_design(std::vector<double>(16, 0.0));
  try {
    fit(degenerate, y, gamma);
    FAIL("expected rank deficiency");
  } catch (const FitError& e) {
    CHECK(e.kind() == FitFailure::rank_deficient);
  }
}

TEST_CASE("damping recovers from a poor start") {
  std::mt19937_64 rng(8);
  const Lattice lat(8, 8);
  const auto gamma = CorrelationMatrix::build(lat, {1.0, 0.3, Metric::l2()});
  const Eigen::VectorXd x = random_binary(lat.size(), 0.5, rng);
  const Eigen::VectorXd y = random_binary(lat.size(), 0.5, rng);
  FitOptions opts;
  opts.beta_init = Eigen::Vector2d(6.0, -6.0);
  opts.damping = true;
  const FitResult damped = fit(design_with_intercept(x), y, gamma, opts);
  const FitResult plain = fit(design_with_intercept(x), y, gamma);
  CHECK((damped.beta_hat - plain.beta_hat).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("score at the truth has mean zero") {
  SimulationConfig config;
  config.lattice = Lattice(8, 8);
  config.beta0 = Eigen::Vector2d(-0.34, -0.26);
  config.covariates = random_covariate(64, 0.5, 21);
  config.correlation = {1.0, 0.4, Metric::l2()};
  config.seed = 99;
  const FieldSimulator sim(config);
  const auto gamma = CorrelationMatrix::build(config.lattice, config.correlation);
  const double root_n = std::sqrt(64.0);
  const int reps = 1000;
  Eigen::Vector2d sum = Eigen::Vector2d::Zero(), sum_sq = Eigen::Vector2d::Zero();
  for (int r = 0; r < reps; ++r) {
    const Eigen::VectorXd u =
        quasi_score(sim.design(), config.beta0, sim.replicate(r).values(), gamma) / root_n;
    sum += u;
    sum_sq += u.cwiseAbs2();
  }
  const Eigen::Vector2d mean = sum / reps;
  const Eigen::Vector2d se = ((sum_sq / reps - mean.cwiseAbs2()) / reps).cwiseSqrt();
  for (int j = 0; j < 2; ++j) CHECK(std::abs(mean(j)) <= 4.0 * se(j));
}

TEST_CASE("Wald test and chi-squared tail") {
  CHECK(chisq1_tail(0.0) == 1.0);
  CHECK(chisq1_tail(3.841459) == doctest::Approx(0.04999999465319575).epsilon(1e-10));
  CHECK(chisq1_tail(6.76) == doctest::Approx(0.009322376047437504).epsilon(1e-10));
  CHECK_THROWS_AS(chisq1_tail(-1.0), std::invalid_argument);

  FitResult f;
  f.beta_hat = Eigen::Vector2d(-0.34, -0.26);
  f.cov_hat = Eigen::Matrix2d::Identity();
  f.cov_hat(1, 1) = 0.26 * 0.26 / 6.76;
  f.converged = true;
  const WaldTest w = wald_test(f, 1);
  CHECK(w.statistic == doctest::Approx(6.76));
  CHECK(w.df == 1);
  CHECK(w.p_value == doctest::Approx(0.00932).epsilon(1e-3));

  f.beta_hat(1) = 0.0;
  CHECK(wald_test(f, 1).statistic == 0.0);
  CHECK(wald_test(f, 1).p_value == 1.0);

  f.converged = false;
  CHECK_THROWS_AS(wald_test(f, 1), std::invalid_argument);
}
