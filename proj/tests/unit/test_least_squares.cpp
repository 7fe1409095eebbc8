#include <doctest.h>

#include <cmath>
#include <vector>

#include "iontrap/error.hpp"
#include "iontrap/least_squares.hpp"

using namespace iontrap;

TEST_CASE("exact exponential data is recovered") {
  std::vector<double> t(30), y(30);
  for (int i = 0; i < 30; ++i) {
    t[i] = 0.1 * i;
    y[i] = 3.0 * std::exp(-1.7 * t[i]) + 0.5;
  }
  auto r = [&](const Eigen::VectorXd& p, Eigen::VectorXd& res) {
    for (int i = 0; i < 30; ++i) res[i] = (y[i] - (p[0] * std::exp(-p[1] * t[i]) + p[2])) / 0.01;
  };
  const auto fit = levenberg_marquardt(r, 30, Eigen::Vector3d(1.0, 1.0, 0.0));
  CHECK(fit.params[0] == doctest::Approx(3.0).epsilon(1e-7));
  CHECK(fit.params[1] == doctest::Approx(1.7).epsilon(1e-7));
  CHECK(fit.params[2] == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(fit.chi2 < 1e-8);
  CHECK(fit.dof == 27);
}

TEST_CASE("covariance of a linear model equals the normal-equation inverse") {
  const std::vector<double> x{1, 2, 3, 4, 5}, y{2.1, 3.9, 6.2, 7.8, 10.1}, s{.1, .2, .1, .3, .2};
  auto r = [&](const Eigen::VectorXd& p, Eigen::VectorXd& res) {
    for (int i = 0; i < 5; ++i) res[i] = (y[i] - p[0] - p[1] * x[i]) / s[i];
  };
  const auto fit = levenberg_marquardt(r, 5, Eigen::Vector2d(0.0, 1.0));
  CHECK(fit.params[0] == doctest::Approx(0.09152854511970637).epsilon(1e-8));
  CHECK(fit.params[1] == doctest::Approx(2.0062615101289127).epsilon(1e-8));
  CHECK(fit.stderr_of(0) == doctest::Approx(0.12969246335920695).epsilon(1e-6));
  CHECK(fit.stderr_of(1) == doctest::Approx(0.04804336081197139).epsilon(1e-6));
  CHECK(fit.reduced_chi2() == doctest::Approx(2.972375690607741 / 3).epsilon(1e-6));
}

TEST_CASE("unidentifiable parameter is a fit_convergence error") {
  auto r = [](const Eigen::VectorXd& p, Eigen::VectorXd& res) {
    for (int i = 0; i < 4; ++i) res[i] = 1.0 - (p[0] + p[1]);  // only the sum is determined
  };
  try {
    levenberg_marquardt(r, 4, Eigen::Vector2d(0.3, 0.3), {}, "toy");
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::fit_convergence);
  }
}
