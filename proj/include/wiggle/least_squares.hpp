#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

namespace wiggle {

/// Residual vector r(x) and its Jacobian dr/dx.
struct LeastSquaresProblem {
  int parameters = 0;
  int residuals = 0;
  std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& r)> residual;
  std::function<void(const Eigen::VectorXd& x, Eigen::MatrixXd& jacobian)> jacobian;
};

struct LeastSquaresOptions {
  int max_evaluations = 4000;
  double tolerance = 1e-12;
};

struct LeastSquaresResult {
  Eigen::VectorXd x;
  Eigen::VectorXd residual;
  /// s^2 (J^T J)^-1 with s^2 = |r|^2 / (m - n).
  Eigen::MatrixXd covariance;
  double rms = 0.0;
  int iterations = 0;
  int evaluations = 0;
};

/// Levenberg-Marquardt (Eigen's MINPACK port) with analytic Jacobians.
/// Throws NonConvergence when the evaluation budget runs out or inputs are improper.
LeastSquaresResult least_squares(const LeastSquaresProblem& problem, const Eigen::VectorXd& x0,
                                 const LeastSquaresOptions& options = {});

}  // namespace wiggle
