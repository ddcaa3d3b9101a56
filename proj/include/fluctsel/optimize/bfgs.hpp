#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

namespace fluctsel {

/// Returns f(x) and fills *grad when non-null. Infeasible points return +inf.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct BfgsOptions {
  double gtol = 1e-5;   // max-norm of the gradient
  double ftol = 1e-10;  // relative change of f between iterations
  double ftol_gmax = 1e-5;  // the relative-change stop also needs this gradient bound
  int max_iter = 500;
  double c1 = 1e-4;
  double c2 = 0.9;
};

struct BfgsResult {
  Eigen::VectorXd x;
  Eigen::VectorXd grad;
  double f = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string reason;
};

/// Quasi-Newton minimization with inverse-Hessian BFGS updates and a
/// strong-Wolfe line search (cubic interpolation in the zoom phase).
/// Throws LineSearchFailure or MaxIterations.
BfgsResult bfgs_minimize(const Objective& f, const Eigen::VectorXd& x0,
                         const BfgsOptions& opt = {});

}  // namespace fluctsel
