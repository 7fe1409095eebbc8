#include "iontrap/least_squares.hpp"

#include <cmath>
#include <sstream>

#include "iontrap/error.hpp"

namespace iontrap {

double LsqResult::stderr_of(int i) const { return std::sqrt(std::max(0.0, covariance(i, i))); }

namespace {

Eigen::MatrixXd jacobian(const ResidualFunction& residual, const Eigen::VectorXd& p, int m,
                         const LsqOptions& opt) {
  Eigen::MatrixXd jac(m, p.size());
  Eigen::VectorXd plus(m), minus(m);
  for (int j = 0; j < p.size(); ++j) {
    const double h = std::max(opt.fd_floor, opt.fd_step * std::abs(p[j]));
    Eigen::VectorXd q = p;
    q[j] = p[j] + h;
    residual(q, plus);
    q[j] = p[j] - h;
    residual(q, minus);
    jac.col(j) = (plus - minus) / (2.0 * h);
  }
  return jac;
}

}  // namespace

LsqResult levenberg_marquardt(const ResidualFunction& residual, int n_residuals, Eigen::VectorXd start,
                              const LsqOptions& opt, const std::string& context) {
  const int n = static_cast<int>(start.size());
  if (n_residuals < n) {
    throw Error(ErrorKind::data_quality, context,
                "fewer residuals (" + std::to_string(n_residuals) + ") than parameters (" +
                    std::to_string(n) + ")");
  }

  Eigen::VectorXd p = std::move(start);
  Eigen::VectorXd r(n_residuals);
  residual(p, r);
  double chi2 = r.squaredNorm();
  if (!std::isfinite(chi2)) {
    throw Error(ErrorKind::fit_convergence, context, "non-finite residuals at the starting point");
  }

  double lambda = opt.initial_lambda;
  bool converged = false;
  int iter = 0;
  Eigen::VectorXd trial_r(n_residuals);

  for (; iter < opt.max_iterations && !converged; ++iter) {
    const Eigen::MatrixXd jac = jacobian(residual, p, n_residuals, opt);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * r;
    if (grad.lpNorm<Eigen::Infinity>() <= opt.gradient_tolerance * std::max(1.0, chi2)) {
      converged = true;
      break;
    }

    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd a = jtj;
      for (int i = 0; i < n; ++i) a(i, i) += lambda * std::max(jtj(i, i), 1e-300);
      const Eigen::VectorXd step = a.ldlt().solve(-grad);
      if (!step.allFinite()) {
        lambda *= 10;
      } else {
        const Eigen::VectorXd trial = p + step;
        residual(trial, trial_r);
        const double trial_chi2 = trial_r.squaredNorm();
        if (std::isfinite(trial_chi2) && trial_chi2 <= chi2) {
          const double decrease = chi2 - trial_chi2;
          const double step_rel = step.norm() / (p.norm() + opt.relative_tolerance);
          p = trial;
          r = trial_r;
          chi2 = trial_chi2;
          lambda = std::max(lambda / 10, 1e-15);
          accepted = true;
          if (decrease <= opt.relative_tolerance * std::max(chi2, 1e-300) ||
              step_rel <= opt.relative_tolerance) {
            converged = true;
          }
        } else {
          lambda *= 10;
        }
      }
      if (!accepted && lambda > 1e14) {
        // No downhill step exists at working precision: p is the minimum.
        converged = true;
        break;
      }
    }
  }

  if (!converged) {
    std::ostringstream msg;
    msg << "no convergence after " << iter << " iterations (chi2 = " << chi2 << ")";
    throw Error(ErrorKind::fit_convergence, context, msg.str());
  }

  const Eigen::MatrixXd jac = jacobian(residual, p, n_residuals, opt);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(jac);
  qr.setThreshold(1e-12);
  if (qr.rank() < n) {
    throw Error(ErrorKind::fit_convergence, context,
                "singular Jacobian (rank " + std::to_string(qr.rank()) + " of " + std::to_string(n) + ")");
  }
  const Eigen::MatrixXd jtj = jac.transpose() * jac;

  LsqResult result;
  result.params = p;
  result.covariance = jtj.inverse();
  result.chi2 = chi2;
  result.dof = n_residuals - n;
  result.iterations = iter;
  return result;
}

}  // namespace iontrap
