#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace iontrap {

/// Fills `residuals` with weighted residuals (y_i - f_i(p)) / sigma_i for parameters `p`.
using ResidualFunction = std::function<void(const Eigen::VectorXd& p, Eigen::VectorXd& residuals)>;

struct LsqOptions {
  int max_iterations = 200;
  double relative_tolerance = 1e-10;  // on chi2 decrease and parameter step
  double gradient_tolerance = 1e-12;
  double initial_lambda = 1e-3;
  /// Relative finite-difference step; absolute floor `fd_floor` for parameters near zero.
  double fd_step = 1e-6;
  double fd_floor = 1e-9;
};

struct LsqResult {
  Eigen::VectorXd params;
  /// (J^T J)^-1 of the weighted problem, unscaled by chi2.
  Eigen::MatrixXd covariance;
  double chi2 = 0;
  int dof = 0;
  int iterations = 0;

  double reduced_chi2() const { return dof > 0 ? chi2 / dof : 0.0; }
  double stderr_of(int i) const;
};

/// Levenberg-Marquardt on weighted residuals with a central-difference Jacobian.
/// Throws Error(fit_convergence) on a singular normal matrix or when the
/// iteration limit is reached; `context` prefixes the message.
LsqResult levenberg_marquardt(const ResidualFunction& residual, int n_residuals, Eigen::VectorXd start,
                              const LsqOptions& options = {}, const std::string& context = "lsq");

}  // namespace iontrap
