#include "wiggle/least_squares.hpp"

#include <cmath>

#include <fmt/format.h>
#include <unsupported/Eigen/LevenbergMarquardt>

#include "wiggle/errors.hpp"

namespace wiggle {

namespace {

struct Functor : Eigen::DenseFunctor<double> {
  const LeastSquaresProblem& problem;
  explicit Functor(const LeastSquaresProblem& p) : DenseFunctor(p.parameters, p.residuals), problem(p) {}
  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& r) const {
    problem.residual(x, r);
    return r.allFinite() ? 0 : -1;
  }
  int df(const Eigen::VectorXd& x, Eigen::MatrixXd& j) const {
    problem.jacobian(x, j);
    return 0;
  }
};

}  // namespace

LeastSquaresResult least_squares(const LeastSquaresProblem& problem, const Eigen::VectorXd& x0,
                                 const LeastSquaresOptions& options) {
  if (problem.residuals < problem.parameters)
    throw NonConvergence(fmt::format("{} residuals cannot determine {} parameters", problem.residuals,
                                     problem.parameters));
  Functor functor(problem);
  Eigen::LevenbergMarquardt<Functor> lm(functor);
  lm.setMaxfev(options.max_evaluations);
  lm.setXtol(options.tolerance);
  lm.setFtol(options.tolerance);
  lm.setGtol(0.0);
  Eigen::VectorXd x = x0;
  const auto status = lm.minimize(x);
  using namespace Eigen::LevenbergMarquardtSpace;
  if (status == TooManyFunctionEvaluation)
    throw NonConvergence(fmt::format("no convergence after {} function evaluations", lm.nfev()));
  if (status == ImproperInputParameters || status == UserAsked || !x.allFinite())
    throw NonConvergence("least-squares solver stopped on invalid input or non-finite residuals");

  LeastSquaresResult result;
  result.x = x;
  result.residual.resize(problem.residuals);
  problem.residual(x, result.residual);
  Eigen::MatrixXd J(problem.residuals, problem.parameters);
  problem.jacobian(x, J);
  const double ssr = result.residual.squaredNorm();
  const int dof = problem.residuals - problem.parameters;
  const double s2 = dof > 0 ? ssr / dof : 0.0;
  const Eigen::MatrixXd jtj = J.transpose() * J;
  result.covariance = s2 * jtj.completeOrthogonalDecomposition().pseudoInverse();
  result.rms = std::sqrt(ssr / problem.residuals);
  result.iterations = static_cast<int>(lm.iterations());
  result.evaluations = static_cast<int>(lm.nfev());
  return result;
}

}  // namespace wiggle
