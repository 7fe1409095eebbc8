#include <doctest.h>

#include <cmath>
#include <vector>

#include "iontrap/random.hpp"
#include "iontrap/stats.hpp"

using namespace iontrap;

TEST_CASE("mean and standard error") {
  const std::vector<double> v{1, 2, 3, 4};
  const auto m = mean_stderr(v);
  CHECK(m.mean == doctest::Approx(2.5));
  CHECK(m.variance == doctest::Approx(5.0 / 3.0));
  CHECK(m.standard_error == doctest::Approx(std::sqrt(5.0 / 12.0)));
  const std::vector<std::uint64_t> u{3, 3, 3};
  CHECK(mean_stderr(u).mean == 3.0);
  CHECK(mean_stderr(u).standard_error == 0.0);
}

TEST_CASE("Kolmogorov p-value against reference values") {
  CHECK(kolmogorov_pvalue(0.05, 100) == doctest::Approx(0.9596004458626864).epsilon(1e-8));
  CHECK(kolmogorov_pvalue(0.1, 30) == doctest::Approx(0.9105536880299603).epsilon(1e-8));
  CHECK(kolmogorov_pvalue(0.02, 10000) == doctest::Approx(0.0006580428207401608).epsilon(1e-6));
  CHECK(kolmogorov_pvalue(0.0, 100) == doctest::Approx(1.0));
}

TEST_CASE("KS test accepts geometric samples and rejects the wrong mean") {
  Rng rng(12345);
  std::geometric_distribution<std::uint64_t> geo(1.0 / (1.0 + 2.0));  // mean 2
  std::vector<std::uint64_t> s(5000);
  for (auto& x : s) x = geo(rng);
  CHECK(ks_test_geometric(s, 2.0).p_value > 0.01);
  CHECK(ks_test_geometric(s, 2.6).p_value < 1e-6);
}

TEST_CASE("weighted line fit against normal equations") {
  const std::vector<double> x{1, 2, 3, 4, 5}, y{2.1, 3.9, 6.2, 7.8, 10.1}, s{.1, .2, .1, .3, .2};
  const auto f = weighted_line_fit(x, y, s);
  CHECK(f.intercept == doctest::Approx(0.09152854511970637).epsilon(1e-10));
  CHECK(f.slope == doctest::Approx(2.0062615101289127).epsilon(1e-12));
  CHECK(f.intercept_stderr == doctest::Approx(0.12969246335920695).epsilon(1e-10));
  CHECK(f.slope_stderr == doctest::Approx(0.04804336081197139).epsilon(1e-10));
  CHECK(f.chi2 == doctest::Approx(2.972375690607741).epsilon(1e-10));
}
