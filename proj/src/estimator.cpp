#include "qlspatial/estimator.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace qlspatial {

namespace {

struct Moments {
  Eigen::VectorXd theta;
  Eigen::VectorXd sigma;
};

Moments moments(const DesignMatrix& t, const Eigen::VectorXd& beta) {
  Moments out;
  out.theta = theta(t, beta);
  out.sigma = (out.theta.array() * (1.0 - out.theta.array())).sqrt().matrix();
  return out;
}

bool interior(const Moments& m) { return (m.sigma.array() > 0.0).all() && m.sigma.allFinite(); }

Eigen::VectorXd score_from(const DesignMatrix& t, const Moments& m, const Eigen::VectorXd& y,
                           const CorrelationMatrix& gamma) {
  // P^T Sigma^{-1/2} Gamma^{-1} Sigma^{-1/2} r = T^T (sigma .* Gamma^{-1} (r ./ sigma))
  const Eigen::VectorXd scaled = ((y - m.theta).array() / m.sigma.array()).matrix();
  const Eigen::VectorXd solved = gamma.solve(scaled);
  return t.matrix().transpose() * (m.sigma.array() * solved.array()).matrix();
}

Eigen::MatrixXd information_from(const DesignMatrix& t, const Moments& m,
                                 const CorrelationMatrix& gamma) {
  const Eigen::MatrixXd b = m.sigma.asDiagonal() * t.matrix();
  const Eigen::MatrixXd solved = gamma.solve(b);
  const Eigen::MatrixXd info = b.transpose() * solved;
  return 0.5 * (info + info.transpose());
}

void check_dimensions(const DesignMatrix& t, const Eigen::VectorXd& beta,
                      const CorrelationMatrix& gamma) {
  if (static_cast<std::size_t>(beta.size()) != t.cols()) {
    throw std::invalid_argument("beta length does not match design columns");
  }
  if (gamma.size() != t.rows()) {
    throw std::invalid_argument("correlation matrix size does not match design rows");
  }
}

}  // namespace

Eigen::VectorXd quasi_score(const DesignMatrix& t, const Eigen::VectorXd& beta,
                            const Eigen::VectorXd& y, const CorrelationMatrix& gamma) {
  check_dimensions(t, beta, gamma);
  if (static_cast<std::size_t>(y.size()) != t.rows()) {
    throw std::invalid_argument("response length does not match design rows");
  }
  const Moments m = moments(t, beta);
  if (!interior(m)) {
    throw std::invalid_argument("quasi_score: fitted probabilities reached 0 or 1");
  }
  return score_from(t, m, y, gamma);
}

Eigen::MatrixXd information(const DesignMatrix& t, const Eigen::VectorXd& beta,
                            const CorrelationMatrix& gamma) {
  check_dimensions(t, beta, gamma);
  const Moments m = moments(t, beta);
  if (!interior(m)) {
    throw std::invalid_argument("information: fitted probabilities reached 0 or 1");
  }
  return information_from(t, m, gamma);
}

const char* to_string(FitFailure kind) {
  switch (kind) {
    case FitFailure::rank_deficient: return "rank_deficient";
    case FitFailure::separation: return "separation";
    case FitFailure::divergence: return "divergence";
    case FitFailure::max_iterations: return "max_iterations";
    case FitFailure::singular_information: return "singular_information";
  }
  return "unknown";
}

bool has_separation(const DesignMatrix& t, const Eigen::VectorXd& y) {
  // Per distinct design row: (count, sum of y).
  std::map<std::vector<double>, std::pair<std::size_t, double>> classes;
  const Eigen::MatrixXd& m = t.matrix();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> key;
    key.reserve(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) key.push_back(m(i, j));
    auto& [count, sum] = classes[key];
    ++count;
    sum += y(i);
  }
  if (classes.size() != t.cols()) {
    return false;
  }
  for (const auto& [key, cls] : classes) {
    const auto& [count, sum] = cls;
    if (sum == 0.0 || sum == static_cast<double>(count)) return true;
  }
  return false;
}

namespace {

struct NewtonOutcome {
  Eigen::VectorXd beta;
  Eigen::MatrixXd info;
  std::vector<IterationRecord> trace;
};

NewtonOutcome newton(const DesignMatrix& t, const Eigen::VectorXd& y,
                     const CorrelationMatrix& gamma, Eigen::VectorXd beta,
                     const FitOptions& options) {
  NewtonOutcome out;
  auto fail = [&](FitFailure kind, const std::string& msg) -> FitError {
    return FitError(kind, msg, out.trace);
  };

  for (int iter = 0;; ++iter) {
    Moments m = moments(t, beta);
    if (!interior(m)) {
      throw fail(FitFailure::divergence,
                 "fitted probabilities reached 0 or 1; no interior solution");
    }
    Eigen::VectorXd u = score_from(t, m, y, gamma);
    const double norm = u.lpNorm<Eigen::Infinity>();
    out.trace.push_back({beta, norm});
    Eigen::MatrixXd info = information_from(t, m, gamma);
    if (!std::isfinite(norm)) {
      throw fail(FitFailure::divergence, "quasi-score is not finite");
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    const bool singular = ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
                          ldlt.vectorD().minCoeff() <= 1e-14 * ldlt.vectorD().maxCoeff();
    Eigen::VectorXd step = singular ? Eigen::VectorXd() : Eigen::VectorXd(ldlt.solve(u));
    // A small score with a large Newton step means theta is drifting to the
    // boundary (the score vanishes there), not a root.
    if (!singular && norm <= options.tol &&
        step.lpNorm<Eigen::Infinity>() <= std::sqrt(options.tol)) {
      out.beta = std::move(beta);
      out.info = std::move(info);
      return out;
    }
    if (iter >= options.max_iter) {
      throw fail(FitFailure::max_iterations,
                 "no convergence after " + std::to_string(options.max_iter) +
                     " iterations (||U||_inf = " + std::to_string(norm) + ")");
    }
    if (singular) {
      throw fail(FitFailure::singular_information, "quasi-information is singular");
    }
    Eigen::VectorXd next = beta + step;
    if (options.damping) {
      for (int halving = 0; halving < 30; ++halving) {
        const Moments trial = moments(t, next);
        if (interior(trial) &&
            score_from(t, trial, y, gamma).lpNorm<Eigen::Infinity>() < norm) {
          break;
        }
        step *= 0.5;
        next = beta + step;
      }
    }
    if (!next.allFinite() || next.lpNorm<Eigen::Infinity>() > options.divergence_bound) {
      throw fail(FitFailure::divergence, "coefficients diverged beyond " +
                                              std::to_string(options.divergence_bound));
    }
    beta = std::move(next);
  }
}

}  // namespace

FitResult fit(const DesignMatrix& t, const Eigen::VectorXd& y, const CorrelationMatrix& gamma,
              const FitOptions& options) {
  if (static_cast<std::size_t>(y.size()) != t.rows()) {
    throw std::invalid_argument("response length does not match design rows");
  }
  if (gamma.size() != t.rows()) {
    throw std::invalid_argument("correlation matrix size does not match design rows");
  }
  if (!t.full_rank()) {
    throw FitError(FitFailure::rank_deficient, "design matrix is not of full column rank");
  }
  if (options.check_separation && has_separation(t, y)) {
    throw FitError(FitFailure::separation,
                   "a covariate class has all-0 or all-1 responses; no finite estimate exists");
  }

  Eigen::VectorXd start;
  if (options.beta_init) {
    start = *options.beta_init;
    if (static_cast<std::size_t>(start.size()) != t.cols()) {
      throw std::invalid_argument("beta_init length does not match design columns");
    }
  } else {
    start = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(t.cols()));
    try {
      FitOptions independence = options;
      independence.damping = false;
      start = newton(t, y, CorrelationMatrix::identity(t.rows()), start, independence).beta;
    } catch (const FitError&) {
      start.setZero();
    }
  }

  NewtonOutcome outcome = newton(t, y, gamma, start, options);
  const Eigen::LLT<Eigen::MatrixXd> llt(outcome.info);
  if (llt.info() != Eigen::Success) {
    throw FitError(FitFailure::singular_information,
                   "quasi-information at the root is not positive definite", outcome.trace);
  }
  FitResult out;
  out.beta_hat = outcome.beta;
  out.cov_hat = llt.solve(Eigen::MatrixXd::Identity(outcome.info.rows(), outcome.info.cols()));
  out.cov_hat = 0.5 * (out.cov_hat + out.cov_hat.transpose());
  out.iterations = static_cast<int>(outcome.trace.size()) - 1;
  out.trace = std::move(outcome.trace);
  out.converged = true;
  return out;
}

double chisq1_tail(double x) {
  if (!(x >= 0.0)) {
    throw std::invalid_argument("chisq1_tail: statistic must be nonnegative");
  }
  return std::erfc(std::sqrt(x / 2.0));
}

WaldTest wald_test(const FitResult& fit, std::size_t j) {
  if (!fit.converged) {
    throw std::invalid_argument("wald_test: fit did not converge");
  }
  if (j >= static_cast<std::size_t>(fit.beta_hat.size())) {
    throw std::out_of_range("wald_test: coefficient index out of range");
  }
  const auto k = static_cast<Eigen::Index>(j);
  const double variance = fit.cov_hat(k, k);
  if (!(variance > 0.0)) {
    throw std::invalid_argument("wald_test: nonpositive variance estimate");
  }
  WaldTest out;
  out.statistic = fit.beta_hat(k) * fit.beta_hat(k) / variance;
  out.df = 1;
  out.p_value = chisq1_tail(out.statistic);
  return out;
}

}  // namespace qlspatial
