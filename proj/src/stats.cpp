#include "iontrap/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "iontrap/error.hpp"

namespace iontrap {

namespace {

template <class T>
MeanStderr mean_stderr_impl(std::span<const T> values) {
  MeanStderr out;
  const auto n = values.size();
  if (n == 0) return out;
  double mean = 0;
  for (auto v : values) mean += static_cast<double>(v);
  mean /= static_cast<double>(n);
  double ss = 0;
  for (auto v : values) ss += (static_cast<double>(v) - mean) * (static_cast<double>(v) - mean);
  out.mean = mean;
  out.variance = n > 1 ? ss / static_cast<double>(n - 1) : 0.0;
  out.standard_error = std::sqrt(out.variance / static_cast<double>(n));
  return out;
}

}  // namespace

MeanStderr mean_stderr(std::span<const double> values) { return mean_stderr_impl(values); }
MeanStderr mean_stderr(std::span<const std::uint64_t> values) { return mean_stderr_impl(values); }

double kolmogorov_pvalue(double statistic, std::size_t n) {
  if (n == 0) return 1.0;
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * statistic;
  if (lambda < 1e-3) return 1.0;
  double sum = 0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += (j % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test_geometric(std::span<const std::uint64_t> samples, double mean) {
  if (samples.empty()) throw Error(ErrorKind::data_quality, "stats", "KS test needs samples");
  std::vector<std::uint64_t> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  const double q = mean / (mean + 1.0);

  // Compare the two step functions at every integer where the empirical CDF jumps.
  double d = 0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    const std::uint64_t k = sorted[i];
    const std::size_t below = i;
    while (i < sorted.size() && sorted[i] == k) ++i;
    const double model_below = k == 0 ? 0.0 : 1.0 - std::pow(q, static_cast<double>(k));
    const double model_at = 1.0 - std::pow(q, static_cast<double>(k + 1));
    d = std::max(d, std::abs(static_cast<double>(below) / n - model_below));
    d = std::max(d, std::abs(static_cast<double>(i) / n - model_at));
  }
  return {d, kolmogorov_pvalue(d, sorted.size())};
}

LineFit weighted_line_fit(std::span<const double> x, std::span<const double> y,
                          std::span<const double> sigma) {
  if (x.size() != y.size() || x.size() != sigma.size()) {
    throw Error(ErrorKind::data_quality, "stats", "line fit inputs differ in length");
  }
  if (x.size() < 2) throw Error(ErrorKind::degenerate_design, "stats", "line fit needs >= 2 points");
  // Centered sums for conditioning.
  double sw = 0, swx = 0, swy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(sigma[i] > 0)) throw Error(ErrorKind::data_quality, "stats", "sigma must be > 0");
    const double w = 1.0 / (sigma[i] * sigma[i]);
    sw += w;
    swx += w * x[i];
    swy += w * y[i];
  }
  const double xm = swx / sw, ym = swy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = 1.0 / (sigma[i] * sigma[i]);
    sxx += w * (x[i] - xm) * (x[i] - xm);
    sxy += w * (x[i] - xm) * (y[i] - ym);
  }
  if (!(sxx > 0)) throw Error(ErrorKind::degenerate_design, "stats", "all x values coincide");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ym - fit.slope * xm;
  fit.slope_stderr = std::sqrt(1.0 / sxx);
  fit.intercept_stderr = std::sqrt(1.0 / sw + xm * xm / sxx);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double res = (y[i] - fit.intercept - fit.slope * x[i]) / sigma[i];
    fit.chi2 += res * res;
  }
  return fit;
}

}  // namespace iontrap
