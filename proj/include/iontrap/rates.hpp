#pragma once

#include <span>
#include <string>
#include <vector>

#include "iontrap/config.hpp"

namespace iontrap {

enum class MeasurementMethod { recool, raman };

const char* to_string(MeasurementMethod m);
MeasurementMethod method_from_string(const std::string& s);

struct HeatingPoint {
  double delay = 0;  // s
  double nbar = 0;   // quanta
  double sigma = 0;  // quanta, statistical only
};

struct HeatingDataset {
  std::vector<HeatingPoint> points;
  double trap_frequency = 0;  // rad/s
  MeasurementMethod method = MeasurementMethod::raman;

  void validate() const;
};

/// Statistical uncertainties only.
struct RateResult {
  double rate = 0;         // d<n>/dt, quanta/s
  double rate_stderr = 0;  // quanta/s
  double reduced_chi2 = 0;
  double chi2 = 0;
  int dof = 0;
};

/// Weighted least squares through the origin, weights 1/sigma^2.
RateResult fit_rate(const HeatingDataset& ds);

/// Diagnostic straight line with free intercept. Not used for headline rates.
struct FreeInterceptRate {
  double rate = 0, rate_stderr = 0;
  double intercept = 0, intercept_stderr = 0;
  double reduced_chi2 = 0;
};
FreeInterceptRate fit_rate_free_intercept(const HeatingDataset& ds);

struct NoisePoint {
  double omega = 0;       // rad/s
  double S_E = 0;         // V^2 m^-2 Hz^-1
  double S_E_stderr = 0;
};

/// S_E = (d<n>/dt) 4 m hbar omega / e^2, with the rate error propagated linearly.
NoisePoint electric_field_noise(double rate, double rate_stderr, const IonSpecies& species, double omega);
/// Inverse of electric_field_noise: heating rate implied by S_E.
double heating_rate_from_noise(double S_E, const IonSpecies& species, double omega);

struct PowerLawPoint {
  double x = 0;  // e.g. omega, rad/s
  double y = 0;  // e.g. rate, quanta/s
  double sigma = 0;
};

/// y = prefactor * x^exponent from a weighted line in log-log space with
/// sigma_log = sigma / y. Prefactor is reported in the units of y at x = 1.
struct PowerLawFit {
  double exponent = 0;
  double exponent_stderr = 0;
  double log_prefactor = 0;  // natural log
  double log_prefactor_stderr = 0;
  double reduced_chi2 = 0;

  double prefactor() const;
  double evaluate(double x) const;
};
PowerLawFit power_law_fit(std::span<const PowerLawPoint> points);

struct MethodComparison {
  double z = 0;
  bool consistent = false;  // z < threshold
  double threshold = 2.0;
};

/// |a - b| / sqrt(sa^2 + sb^2), consistent when below `threshold`.
MethodComparison compare_methods(const RateResult& a, const RateResult& b, double threshold = 2.0);

}  // namespace iontrap
