#include "qlspatial/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "qlspatial/error.hpp"

namespace qlspatial {

void CorrelationModel::validate() const {
  if (!(a > 0.0 && a <= 1.0)) {
    throw std::invalid_argument("correlation scale a must lie in (0, 1], got " + std::to_string(a));
  }
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw std::invalid_argument("correlation decay rho must lie in [0, 1], got " +
                                std::to_string(rho));
  }
  if (a * rho > 1.0) {
    throw std::invalid_argument("a * rho must not exceed 1");
  }
  if (!(metric.p >= 1.0)) {
    throw std::invalid_argument("metric order p must be >= 1");
  }
}

double CorrelationModel::at_distance(double d) const { return a * std::pow(rho, d); }

Eigen::MatrixXd omega_inverse(std::size_t n, double rho) {
  if (n < 1) {
    throw std::invalid_argument("omega_inverse: dimension must be >= 1");
  }
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw std::invalid_argument("omega_inverse: rho must lie in [0, 1) (rho = 1 is singular)");
  }
  const auto size = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(size, size);
  if (n == 1) {
    out(0, 0) = 1.0;
    return out;
  }
  const double scale = 1.0 / (1.0 - rho * rho);
  for (Eigen::Index i = 0; i < size; ++i) {
    const bool corner = i == 0 || i == size - 1;
    out(i, i) = scale * (corner ? 1.0 : 1.0 + rho * rho);
    if (i + 1 < size) {
      out(i, i + 1) = -rho * scale;
      out(i + 1, i) = -rho * scale;
    }
  }
  return out;
}

namespace {

bool kronecker_eligible(const CorrelationModel& model) {
  return model.metric.is_l1() && model.a == 1.0;
}

// rho per grid step once spacing is folded in.
double step_rho(const Lattice& lattice, const CorrelationModel& model) {
  return std::pow(model.rho, lattice.spacing());
}

}  // namespace

Eigen::SparseMatrix<double> gamma_inverse_structured(const Lattice& lattice,
                                                     const CorrelationModel& model) {
  if (!kronecker_eligible(model)) {
    throw std::invalid_argument(
        "structured inverse requires the L1 metric with a = 1");
  }
  model.validate();
  const double rho = step_rho(lattice, model);
  const Eigen::MatrixXd col_inv = omega_inverse(lattice.cols(), rho);
  const Eigen::MatrixXd row_inv = omega_inverse(lattice.rows(), rho);

  const auto m = static_cast<Eigen::Index>(lattice.rows());
  const auto n = static_cast<Eigen::Index>(lattice.cols());
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(9 * m * n));
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index c2 = std::max<Eigen::Index>(0, c - 1); c2 <= std::min(n - 1, c + 1); ++c2) {
      const double outer = col_inv(c, c2);
      if (outer == 0.0) continue;
      for (Eigen::Index r = 0; r < m; ++r) {
        for (Eigen::Index r2 = std::max<Eigen::Index>(0, r - 1); r2 <= std::min(m - 1, r + 1);
             ++r2) {
          const double inner = row_inv(r, r2);
          if (inner == 0.0) continue;
          entries.emplace_back(c * m + r, c2 * m + r2, outer * inner);
        }
      }
    }
  }
  Eigen::SparseMatrix<double> out(m * n, m * n);
  out.setFromTriplets(entries.begin(), entries.end());
  return out;
}

Eigen::MatrixXd gamma_matrix(const Lattice& lattice, const CorrelationModel& model) {
  model.validate();
  const auto size = static_cast<Eigen::Index>(lattice.size());
  Eigen::MatrixXd gamma(size, size);
  for (Eigen::Index j = 0; j < size; ++j) {
    gamma(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < size; ++i) {
      const double d = lattice.distance(static_cast<std::size_t>(i),
                                        static_cast<std::size_t>(j), model.metric);
      const double value = model.at_distance(d);
      gamma(i, j) = value;
      gamma(j, i) = value;
    }
  }
  return gamma;
}

Eigen::LLT<Eigen::MatrixXd> factorize_spd(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() == Eigen::Success) {
    return llt;
  }
  // Locate the first failing pivot with a plain left-looking Cholesky.
  const Eigen::Index n = m.rows();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double pivot = m(j, j) - l.row(j).head(j).squaredNorm();
    if (!(pivot > 0.0)) {
      throw NotPositiveDefinite(std::string(what) + " is not positive definite: pivot " +
                                    std::to_string(j) + " = " + std::to_string(pivot),
                                j, pivot);
    }
    l(j, j) = std::sqrt(pivot);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      l(i, j) = (m(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
  }
  // Eigen rejected it but every pivot was positive: numerically borderline.
  throw NotPositiveDefinite(std::string(what) + " is numerically not positive definite", n - 1,
                            0.0);
}

CorrelationMatrix CorrelationMatrix::build(const Lattice& lattice, const CorrelationModel& model) {
  CorrelationMatrix out;
  out.gamma_ = gamma_matrix(lattice, model);
  if (kronecker_eligible(model) && step_rho(lattice, model) < 1.0) {
    // Omega_n (x) Omega_m is SPD whenever rho < 1; the tridiagonal factors
    // certify it without a dense factorization.
    out.structure_ = CorrelationStructure::kronecker_l1_unit_a;
    out.inverse_ = gamma_inverse_structured(lattice, model);
  } else {
    out.structure_ = CorrelationStructure::dense;
    out.llt_ = factorize_spd(out.gamma_, "correlation matrix");
  }
  return out;
}

CorrelationMatrix CorrelationMatrix::identity(std::size_t n) {
  return build(Lattice(n, 1), CorrelationModel{1.0, 0.0, Metric::l1()});
}

CorrelationMatrix CorrelationMatrix::from_dense(Eigen::MatrixXd gamma) {
  if (gamma.rows() != gamma.cols() || gamma.rows() == 0) {
    throw std::invalid_argument("correlation matrix must be square and nonempty");
  }
  if (!gamma.isApprox(gamma.transpose(), 1e-12)) {
    throw std::invalid_argument("correlation matrix must be symmetric");
  }
  if ((gamma.diagonal().array() - 1.0).abs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("correlation matrix must have a unit diagonal");
  }
  CorrelationMatrix out;
  out.gamma_ = std::move(gamma);
  out.structure_ = CorrelationStructure::dense;
  out.llt_ = factorize_spd(out.gamma_, "correlation matrix");
  return out;
}

Eigen::MatrixXd CorrelationMatrix::solve(const Eigen::Ref<const Eigen::MatrixXd>& rhs) const {
  if (rhs.rows() != gamma_.rows()) {
    throw std::invalid_argument("solve: right-hand side has " + std::to_string(rhs.rows()) +
                                " rows, expected " + std::to_string(gamma_.rows()));
  }
  if (structure_ == CorrelationStructure::kronecker_l1_unit_a) {
    return inverse_ * rhs;
  }
  return llt_.solve(rhs);
}

CovarianceMatrix covariance_from_theta(const CorrelationMatrix& gamma,
                                       const Eigen::VectorXd& theta) {
  if (static_cast<std::size_t>(theta.size()) != gamma.size()) {
    throw std::invalid_argument("covariance_from_theta: theta length does not match Gamma");
  }
  if ((theta.array() <= 0.0).any() || (theta.array() >= 1.0).any()) {
    throw std::invalid_argument("covariance_from_theta: theta on {0,1} has zero variance");
  }
  CovarianceMatrix out;
  out.sigma = (theta.array() * (1.0 - theta.array())).sqrt().matrix();
  out.v = out.sigma.asDiagonal() * gamma.dense() * out.sigma.asDiagonal();
  return out;
}

CovarianceSumBound check_covariance_sum_bound(const Lattice& lattice,
                                              const CorrelationModel& model) {
  model.validate();
  if (!model.metric.is_l1() && !model.metric.is_l2()) {
    throw std::invalid_argument("covariance sum bound is defined for L1 and L2 only");
  }
  if (model.rho >= 1.0) {
    throw std::invalid_argument("covariance sum bound degenerates at rho = 1");
  }
  CovarianceSumBound out;
  if (model.rho == 0.0) {
    return out;
  }
  constexpr double worst_variance = 0.25;
  const std::size_t m = lattice.rows();
  const std::size_t n = lattice.cols();
  // Ordered pairs at row offset dr and column offset dc: (m-dr)(n-dc) per
  // sign pattern.
  double corr_sum = 0.0;
  for (std::size_t dc = 0; dc < n; ++dc) {
    for (std::size_t dr = 0; dr < m; ++dr) {
      if (dr == 0 && dc == 0) continue;
      const double pairs = static_cast<double>((m - dr) * (n - dc)) * (dr > 0 ? 2.0 : 1.0) *
                           (dc > 0 ? 2.0 : 1.0);
      corr_sum += pairs * model.at_distance(lattice.offset_distance(dr, dc, model.metric));
    }
  }
  out.sum = worst_variance * corr_sum;

  const double rho = model.rho;
  const double scale = model.a * static_cast<double>(lattice.size());
  if (model.metric.is_l1()) {
    out.bound = scale * (2.0 * rho - rho * rho) / ((1.0 - rho) * (1.0 - rho));
  } else {
    const double log_rho = std::log(rho);
    out.bound = scale * (2.0 * rho / (1.0 - rho) + std::numbers::pi / 2.0 / (log_rho * log_rho));
  }
  out.holds = out.sum <= out.bound;
  return out;
}

namespace {

Eigen::MatrixXd dense_inverse(const Eigen::MatrixXd& m) {
  return factorize_spd(m, "correlation matrix")
      .solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
}

}  // namespace

InverseOrdering check_inverse_ordering(const Lattice& lattice, double a, double rho) {
  const Eigen::MatrixXd unit_inv =
      dense_inverse(gamma_matrix(lattice, CorrelationModel{1.0, rho, Metric::l1()}));
  const Eigen::MatrixXd general_inv =
      dense_inverse(gamma_matrix(lattice, CorrelationModel{a, rho, Metric::l1()}));
  InverseOrdering out;
  out.upper_gap = (unit_inv / a - general_inv).minCoeff();
  out.lower_gap = (general_inv - unit_inv).minCoeff();
  return out;
}

double metric_ordering_gap(const Lattice& lattice, double a, double rho) {
  const Eigen::MatrixXd l2 = gamma_matrix(lattice, CorrelationModel{a, rho, Metric::l2()});
  const Eigen::MatrixXd l1 = gamma_matrix(lattice, CorrelationModel{a, rho, Metric::l1()});
  return (l2 - l1).minCoeff();
}

MaxInverseEntry max_inverse_entries(const Lattice& lattice, double a, double rho) {
  MaxInverseEntry out;
  out.unit_a = dense_inverse(gamma_matrix(lattice, CorrelationModel{1.0, rho, Metric::l1()}))
                   .cwiseAbs()
                   .maxCoeff();
  out.general = dense_inverse(gamma_matrix(lattice, CorrelationModel{a, rho, Metric::l1()}))
                    .cwiseAbs()
                    .maxCoeff();
  return out;
}

}  // namespace qlspatial
