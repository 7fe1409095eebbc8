#pragma once

#include <cstdint>
#include <span>

namespace iontrap {

struct MeanStderr {
  double mean = 0;
  double standard_error = 0;
  double variance = 0;
};

MeanStderr mean_stderr(std::span<const double> values);
MeanStderr mean_stderr(std::span<const std::uint64_t> values);

/// Asymptotic Kolmogorov survival function with Stephens' small-sample correction.
double kolmogorov_pvalue(double statistic, std::size_t n);

struct KsResult {
  double statistic = 0;
  double p_value = 0;
};

/// One-sample KS test of integer samples against the geometric (thermal) law with the given mean.
KsResult ks_test_geometric(std::span<const std::uint64_t> samples, double mean);

struct LineFit {
  double slope = 0;
  double intercept = 0;
  double slope_stderr = 0;
  double intercept_stderr = 0;
  double chi2 = 0;
};

/// Weighted straight line y = a + b x with weights 1/sigma^2 (sigma > 0).
LineFit weighted_line_fit(std::span<const double> x, std::span<const double> y,
                          std::span<const double> sigma);

}  // namespace iontrap
