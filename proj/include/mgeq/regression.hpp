#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace mgeq {

// proj_{[0, H+1-h]}(x) with 1-based step index h in [1, H+1].
double clip_q(double x, int h, int horizon);

// Regularized empirical feature covariance Sigma = lambda*I + sum phi phi^T
// with a maintained inverse. Rank-one Sherman-Morrison updates, full
// refactorization every 512 additions to bound drift.
class CovarianceAccumulator {
 public:
  CovarianceAccumulator(int dim, double lambda);

  int dim() const { return dim_; }
  long long count() const { return count_; }
  void add(std::span<const double> phi);

  // ||phi||_{Sigma^{-1}} = sqrt(phi^T Sigma^{-1} phi).
  double bonus(std::span<const double> phi) const;

  const Eigen::MatrixXd& matrix() const { return sigma_; }
  const Eigen::MatrixXd& inverse() const { return inverse_; }

 private:
  void refactor();
  int dim_;
  double lambda_;
  long long count_ = 0;
  int since_refactor_ = 0;
  Eigen::MatrixXd sigma_;
  Eigen::MatrixXd inverse_;
};

struct RegressionFit {
  Eigen::VectorXd theta;
  double radius = 0.0;

  double dot(std::span<const double> phi) const {
    double v = 0.0;
    for (int j = 0; j < theta.size(); ++j) v += theta[j] * phi[j];
    return v;
  }
};

// Streaming sufficient statistics for least squares: G = sum phi phi^T,
// b = sum phi * y. The constrained fit only needs these.
class LeastSquaresAccumulator {
 public:
  explicit LeastSquaresAccumulator(int dim);
  void add(std::span<const double> phi, double target);
  int dim() const { return dim_; }
  long long count() const { return count_; }
  const Eigen::MatrixXd& gram() const { return gram_; }
  const Eigen::VectorXd& moment() const { return moment_; }

  // Residual sum of squares offset: sum y^2, so objective(theta) =
  // theta^T G theta - 2 theta^T b + target_sq.
  double target_sq() const { return target_sq_; }
  double objective(const Eigen::VectorXd& theta) const;

 private:
  int dim_;
  long long count_ = 0;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd moment_;
  double target_sq_ = 0.0;
};

// Global minimizer of sum (phi^T theta - y)^2 over the Euclidean ball of
// radius W. Solves the normal equations with a 1e-10 Tikhonov term; when the
// unconstrained solution leaves the ball, bisects the KKT multiplier mu on
// ||(G + mu I)^{-1} b|| = W (monotone in mu). Empty data yields theta = 0.
RegressionFit fit_constrained_ls(const LeastSquaresAccumulator& acc, double radius);
RegressionFit fit_constrained_ls(
    const std::vector<std::pair<std::vector<double>, double>>& dataset, int dim, double radius);

}  // namespace mgeq
