#include "mgeq/regression.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mgeq {

namespace {
constexpr double kTikhonov = 1e-10;
constexpr int kRefactorPeriod = 512;

Eigen::Map<const Eigen::VectorXd> as_vec(std::span<const double> phi) {
  return Eigen::Map<const Eigen::VectorXd>(phi.data(), static_cast<Eigen::Index>(phi.size()));
}
}  // namespace

double clip_q(double x, int h, int horizon) {
  if (h < 1 || h > horizon + 1) throw std::invalid_argument("clip_q: step index out of range");
  double hi = static_cast<double>(horizon + 1 - h);
  return std::min(std::max(x, 0.0), hi);
}

CovarianceAccumulator::CovarianceAccumulator(int dim, double lambda)
    : dim_(dim), lambda_(lambda) {
  if (dim_ < 1) throw std::invalid_argument("CovarianceAccumulator: dim must be positive");
  if (!(lambda_ > 0.0)) throw std::invalid_argument("CovarianceAccumulator: lambda must be > 0");
  sigma_ = Eigen::MatrixXd::Identity(dim_, dim_) * lambda_;
  inverse_ = Eigen::MatrixXd::Identity(dim_, dim_) / lambda_;
}

void CovarianceAccumulator::add(std::span<const double> phi) {
  if (phi.size() != static_cast<std::size_t>(dim_))
    throw std::invalid_argument("CovarianceAccumulator: dimension mismatch");
  Eigen::VectorXd x = as_vec(phi);
  sigma_.selfadjointView<Eigen::Lower>().rankUpdate(x);
  sigma_ = sigma_.selfadjointView<Eigen::Lower>();
  ++count_;
  if (++since_refactor_ >= kRefactorPeriod) {
    refactor();
    return;
  }
  // Sherman-Morrison: (A + xx^T)^{-1} = A^{-1} - A^{-1}x x^T A^{-1} / (1 + x^T A^{-1} x).
  Eigen::VectorXd Ainv_x = inverse_ * x;
  double denom = 1.0 + x.dot(Ainv_x);
  inverse_.noalias() -= (Ainv_x * Ainv_x.transpose()) / denom;
}

void CovarianceAccumulator::refactor() {
  since_refactor_ = 0;
  inverse_ = sigma_.ldlt().solve(Eigen::MatrixXd::Identity(dim_, dim_));
}

double CovarianceAccumulator::bonus(std::span<const double> phi) const {
  Eigen::VectorXd x = as_vec(phi);
  double q = x.dot(inverse_ * x);
  return std::sqrt(std::max(q, 0.0));
}

LeastSquaresAccumulator::LeastSquaresAccumulator(int dim) : dim_(dim) {
  if (dim_ < 1) throw std::invalid_argument("LeastSquaresAccumulator: dim must be positive");
  gram_ = Eigen::MatrixXd::Zero(dim_, dim_);
  moment_ = Eigen::VectorXd::Zero(dim_);
}

void LeastSquaresAccumulator::add(std::span<const double> phi, double target) {
  if (phi.size() != static_cast<std::size_t>(dim_))
    throw std::invalid_argument("LeastSquaresAccumulator: dimension mismatch");
  if (!std::isfinite(target)) throw std::invalid_argument("LeastSquaresAccumulator: non-finite target");
  for (double v : phi) {
    if (!std::isfinite(v))
      throw std::invalid_argument("LeastSquaresAccumulator: non-finite feature");
  }
  Eigen::VectorXd x = as_vec(phi);
  gram_.selfadjointView<Eigen::Lower>().rankUpdate(x);
  gram_ = gram_.selfadjointView<Eigen::Lower>();
  moment_.noalias() += x * target;
  target_sq_ += target * target;
  ++count_;
}

double LeastSquaresAccumulator::objective(const Eigen::VectorXd& theta) const {
  return theta.dot(gram_ * theta) - 2.0 * theta.dot(moment_) + target_sq_;
}

RegressionFit fit_constrained_ls(const LeastSquaresAccumulator& acc, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("fit_constrained_ls: radius must be positive");
  RegressionFit fit;
  fit.radius = radius;
  const int d = acc.dim();
  if (acc.count() == 0) {
    fit.theta = Eigen::VectorXd::Zero(d);
    return fit;
  }
  // Eigendecompose once; ||theta(mu)||^2 = sum c_j^2 / (lam_j + t + mu)^2 is
  // then cheap to evaluate along the bisection.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(acc.gram());
  Eigen::VectorXd lam = es.eigenvalues();
  Eigen::VectorXd c = es.eigenvectors().transpose() * acc.moment();

  auto norm_at = [&](double mu) {
    double sq = 0.0;
    for (int j = 0; j < d; ++j) {
      double denom = lam[j] + kTikhonov + mu;
      double z = c[j] / denom;
      sq += z * z;
    }
    return std::sqrt(sq);
  };
  auto theta_at = [&](double mu) {
    Eigen::VectorXd scaled(d);
    for (int j = 0; j < d; ++j) scaled[j] = c[j] / (lam[j] + kTikhonov + mu);
    return Eigen::VectorXd(es.eigenvectors() * scaled);
  };

  if (norm_at(0.0) <= radius) {
    fit.theta = theta_at(0.0);
    return fit;
  }
  double lo = 0.0;
  double hi = 1.0;
  while (norm_at(hi) > radius) hi *= 2.0;
  for (int iter = 0; iter < 200; ++iter) {
    double mid = 0.5 * (lo + hi);
    if (norm_at(mid) > radius) {
      lo = mid;
    } else {
      hi = mid;
    }
    if ((hi - lo) <= 1e-10 * std::max(1.0, hi)) break;
  }
  fit.theta = theta_at(hi);
  double n = fit.theta.norm();
  if (n > radius) fit.theta *= radius / n;
  return fit;
}

RegressionFit fit_constrained_ls(
    const std::vector<std::pair<std::vector<double>, double>>& dataset, int dim, double radius) {
  LeastSquaresAccumulator acc(dim);
  for (const auto& [phi, y] : dataset) acc.add(phi, y);
  return fit_constrained_ls(acc, radius);
}

}  // namespace mgeq
