#include <doctest.h>

#include <cmath>
#include <limits>

#include "mgeq/regression.hpp"
#include "mgeq/rng.hpp"

using namespace mgeq;

TEST_CASE("clip_q clamps to [0, H+1-h] with 1-based steps") {
  CHECK(clip_q(5.2, 1, 3) == doctest::Approx(3.0));
  CHECK(clip_q(-0.1, 2, 3) == doctest::Approx(0.0));
  CHECK(clip_q(1.0, 3, 3) == doctest::Approx(1.0));
  CHECK(clip_q(0.7, 4, 3) == doctest::Approx(0.0));  // h = H+1 clamps to zero
  CHECK_THROWS_AS(clip_q(0.0, 0, 3), std::invalid_argument);
  CHECK_THROWS_AS(clip_q(0.0, 5, 3), std::invalid_argument);
}

TEST_CASE("constrained LS closed forms") {
  LeastSquaresAccumulator one(3);
  one.add(std::vector<double>{1.0, 0.0, 0.0}, 1.0);
  RegressionFit wide = fit_constrained_ls(one, 10.0);
  CHECK(wide.theta[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(wide.theta[1] == doctest::Approx(0.0));
  CHECK(wide.theta[2] == doctest::Approx(0.0));

  RegressionFit tight = fit_constrained_ls(one, 0.5);
  CHECK(tight.theta.norm() == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(tight.theta[0] == doctest::Approx(0.5).epsilon(1e-8));

  LeastSquaresAccumulator scalar(1);
  scalar.add(std::vector<double>{1.0}, 0.0);
  scalar.add(std::vector<double>{1.0}, 1.0);
  RegressionFit mean = fit_constrained_ls(scalar, 10.0);
  CHECK(mean.theta[0] == doctest::Approx(0.5).epsilon(1e-9));

  LeastSquaresAccumulator empty(2);
  RegressionFit zero = fit_constrained_ls(empty, 1.0);
  CHECK(zero.theta.norm() == 0.0);
}

TEST_CASE("constrained LS beats random feasible probes and the projection") {
  Rng rng(31337);
  for (int inst = 0; inst < 60; ++inst) {
    int d = 1 + static_cast<int>(rng.next_u64() % 8);
    int n = 1 + static_cast<int>(rng.next_u64() % 50);
    double W = 0.2 + 2.0 * rng.next_double();
    LeastSquaresAccumulator acc(d);
    std::vector<double> phi(d);
    for (int j = 0; j < n; ++j) {
      double norm_sq = 0.0;
      for (double& x : phi) {
        x = 2.0 * rng.next_double() - 1.0;
        norm_sq += x * x;
      }
      double norm = std::sqrt(norm_sq);
      if (norm > 1.0)
        for (double& x : phi) x /= norm;
      acc.add(phi, 3.0 * rng.next_double() - 1.0);
    }
    RegressionFit fit = fit_constrained_ls(acc, W);
    CHECK(fit.theta.norm() <= W + 1e-9);
    double fit_obj = acc.objective(fit.theta);
    for (int probe = 0; probe < 2000; ++probe) {
      Eigen::VectorXd candidate(d);
      double norm_sq = 0.0;
      for (int j = 0; j < d; ++j) {
        candidate[j] = 2.0 * rng.next_double() - 1.0;
        norm_sq += candidate[j] * candidate[j];
      }
      candidate *= W * std::pow(rng.next_double(), 1.0 / d) / std::sqrt(norm_sq);
      CHECK(acc.objective(candidate) >= fit_obj - 1e-9);
    }
    Eigen::MatrixXd G = acc.gram() + 1e-10 * Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd unconstrained = G.ldlt().solve(acc.moment());
    if (unconstrained.norm() > W) unconstrained *= W / unconstrained.norm();
    CHECK(fit_obj <= acc.objective(unconstrained) + 1e-9);
  }
}

TEST_CASE("bonus closed forms") {
  CovarianceAccumulator two(2, 2.0);
  std::vector<double> e1 = {1.0, 0.0};
  CHECK(two.bonus(e1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  std::vector<double> zero = {0.0, 0.0};
  CHECK(two.bonus(zero) == doctest::Approx(0.0));

  CovarianceAccumulator acc(3, 1.0);
  std::vector<double> e = {1.0, 0.0, 0.0};
  for (int k = 0; k < 10; ++k) acc.add(e);
  CHECK(acc.bonus(e) == doctest::Approx(1.0 / std::sqrt(11.0)).epsilon(1e-10));
}

TEST_CASE("rank-one updates track the from-scratch inverse") {
  Rng rng(5150);
  const int d = 6;
  CovarianceAccumulator acc(d, 1.5);
  Eigen::MatrixXd direct = Eigen::MatrixXd::Identity(d, d) * 1.5;
  std::vector<double> phi(d);
  for (int step = 0; step < 10'000; ++step) {
    double norm_sq = 0.0;
    for (double& x : phi) {
      x = 2.0 * rng.next_double() - 1.0;
      norm_sq += x * x;
    }
    double norm = std::sqrt(norm_sq);
    if (norm > 1.0)
      for (double& x : phi) x /= norm;
    acc.add(phi);
    Eigen::Map<Eigen::VectorXd> v(phi.data(), d);
    direct += v * v.transpose();
  }
  Eigen::MatrixXd err = acc.matrix() * acc.inverse() - Eigen::MatrixXd::Identity(d, d);
  CHECK(err.cwiseAbs().maxCoeff() <= 1e-8);
  Eigen::MatrixXd drift = acc.matrix() - direct;
  CHECK(drift.cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("bonus is monotone under sample accumulation") {
  Rng rng(7707);
  for (int stream = 0; stream < 200; ++stream) {
    int d = 1 + static_cast<int>(rng.next_u64() % 6);
    CovarianceAccumulator acc(d, 0.5 + rng.next_double());
    std::vector<double> probe(d), sample(d);
    double norm_sq = 0.0;
    for (double& x : probe) {
      x = 2.0 * rng.next_double() - 1.0;
      norm_sq += x * x;
    }
    for (double& x : probe) x /= std::max(1.0, std::sqrt(norm_sq));
    double last = acc.bonus(probe);
    for (int step = 0; step < 50; ++step) {
      norm_sq = 0.0;
      for (double& x : sample) {
        x = 2.0 * rng.next_double() - 1.0;
        norm_sq += x * x;
      }
      for (double& x : sample) x /= std::max(1.0, std::sqrt(norm_sq));
      acc.add(sample);
      double now = acc.bonus(probe);
      CHECK(now <= last + 1e-10);
      last = now;
    }
  }
}

TEST_CASE("non-finite inputs are rejected") {
  LeastSquaresAccumulator acc(2);
  std::vector<double> bad = {std::nan(""), 0.0};
  CHECK_THROWS_AS(acc.add(bad, 1.0), std::invalid_argument);
  std::vector<double> ok = {0.5, 0.5};
  CHECK_THROWS_AS(acc.add(ok, std::numeric_limits<double>::infinity()), std::invalid_argument);
}
