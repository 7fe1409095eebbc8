#include "iontrap/rates.hpp"

#include <cmath>
#include <vector>

#include "iontrap/constants.hpp"
#include "iontrap/error.hpp"
#include "iontrap/stats.hpp"

namespace iontrap {

namespace c = constants;

const char* to_string(MeasurementMethod m) { return m == MeasurementMethod::recool ? "recool" : "raman"; }

MeasurementMethod method_from_string(const std::string& s) {
  if (s == "recool") return MeasurementMethod::recool;
  if (s == "raman") return MeasurementMethod::raman;
  throw Error(ErrorKind::config, "rates", "unknown method '" + s + "' (expected recool or raman)");
}

void HeatingDataset::validate() const {
  for (const auto& p : points) {
    if (!(p.sigma > 0)) throw Error(ErrorKind::data_quality, "rates", "every point needs sigma > 0");
    if (!(p.delay >= 0)) throw Error(ErrorKind::data_quality, "rates", "delays must be >= 0");
    if (!std::isfinite(p.nbar)) throw Error(ErrorKind::data_quality, "rates", "nbar must be finite");
  }
}

RateResult fit_rate(const HeatingDataset& ds) {
  ds.validate();
  if (ds.points.size() < 1) throw Error(ErrorKind::degenerate_design, "rates", "rate fit needs points");
  double stt = 0, stn = 0;
  for (const auto& p : ds.points) {
    const double w = 1.0 / (p.sigma * p.sigma);
    stt += w * p.delay * p.delay;
    stn += w * p.delay * p.nbar;
  }
  if (!(stt > 0)) throw Error(ErrorKind::degenerate_design, "rates", "all delays are zero");
  RateResult r;
  r.rate = stn / stt;
  r.rate_stderr = 1.0 / std::sqrt(stt);
  for (const auto& p : ds.points) {
    const double res = (p.nbar - r.rate * p.delay) / p.sigma;
    r.chi2 += res * res;
  }
  r.dof = static_cast<int>(ds.points.size()) - 1;
  r.reduced_chi2 = r.dof > 0 ? r.chi2 / r.dof : 0.0;
  return r;
}

FreeInterceptRate fit_rate_free_intercept(const HeatingDataset& ds) {
  ds.validate();
  std::vector<double> x, y, s;
  for (const auto& p : ds.points) {
    x.push_back(p.delay);
    y.push_back(p.nbar);
    s.push_back(p.sigma);
  }
  const auto line = weighted_line_fit(x, y, s);
  FreeInterceptRate r;
  r.rate = line.slope;
  r.rate_stderr = line.slope_stderr;
  r.intercept = line.intercept;
  r.intercept_stderr = line.intercept_stderr;
  const int dof = static_cast<int>(ds.points.size()) - 2;
  r.reduced_chi2 = dof > 0 ? line.chi2 / dof : 0.0;
  return r;
}

namespace {

double noise_factor(const IonSpecies& species, double omega) {
  if (!(omega > 0)) throw Error(ErrorKind::config, "rates", "omega must be > 0");
  if (!(species.mass > 0)) throw Error(ErrorKind::config, "rates", "mass must be > 0");
  return 4.0 * species.mass * c::hbar * omega / (c::elementary_charge * c::elementary_charge);
}

}  // namespace

NoisePoint electric_field_noise(double rate, double rate_stderr, const IonSpecies& species, double omega) {
  if (!(rate >= 0)) throw Error(ErrorKind::data_quality, "rates", "heating rate must be >= 0");
  const double k = noise_factor(species, omega);
  return NoisePoint{omega, rate * k, std::abs(rate_stderr) * k};
}

double heating_rate_from_noise(double S_E, const IonSpecies& species, double omega) {
  return S_E / noise_factor(species, omega);
}

double PowerLawFit::prefactor() const { return std::exp(log_prefactor); }

double PowerLawFit::evaluate(double x) const { return std::exp(log_prefactor + exponent * std::log(x)); }

PowerLawFit power_law_fit(std::span<const PowerLawPoint> points) {
  if (points.size() < 2) throw Error(ErrorKind::degenerate_design, "rates", "power-law fit needs >= 2 points");
  std::vector<double> lx, ly, ls;
  for (const auto& p : points) {
    if (!(p.x > 0) || !(p.y > 0)) {
      throw Error(ErrorKind::data_quality, "rates", "power-law fit needs positive x and y");
    }
    if (!(p.sigma > 0)) throw Error(ErrorKind::data_quality, "rates", "power-law fit needs sigma > 0");
    lx.push_back(std::log(p.x));
    ly.push_back(std::log(p.y));
    ls.push_back(p.sigma / p.y);
  }
  const auto line = weighted_line_fit(lx, ly, ls);
  PowerLawFit fit;
  fit.exponent = line.slope;
  fit.exponent_stderr = line.slope_stderr;
  fit.log_prefactor = line.intercept;
  fit.log_prefactor_stderr = line.intercept_stderr;
  const int dof = static_cast<int>(points.size()) - 2;
  fit.reduced_chi2 = dof > 0 ? line.chi2 / dof : 0.0;
  return fit;
}

MethodComparison compare_methods(const RateResult& a, const RateResult& b, double threshold) {
  MethodComparison m;
  m.threshold = threshold;
  const double combined = std::hypot(a.rate_stderr, b.rate_stderr);
  if (combined > 0) {
    m.z = std::abs(a.rate - b.rate) / combined;
  } else {
    m.z = a.rate == b.rate ? 0.0 : INFINITY;
  }
  m.consistent = m.z < threshold;
  return m;
}

}  // namespace iontrap
