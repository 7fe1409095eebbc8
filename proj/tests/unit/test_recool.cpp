#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "iontrap/constants.hpp"
#include "iontrap/error.hpp"
#include "iontrap/recool.hpp"

using namespace iontrap;
namespace c = iontrap::constants;

namespace {

const IonSpecies kMg = IonSpecies::mg25();

TrapLaserConfig trap_at(double f_hz, double detuning_linewidths = -0.5) {
  auto cfg = TrapLaserConfig::doppler_default(kMg, c::two_pi * f_hz);
  cfg.detuning = detuning_linewidths * kMg.gamma();
  return cfg;
}

double quantum(const TrapLaserConfig& cfg) { return c::hbar * cfg.motional_frequency; }

// Period average of the Lorentzian in closed form:
// <1/(a^2 + (delta - b cos phi)^2)> = Im[1/sqrt(z^2 - b^2)] / a with z = delta - i a.
double averaged_rate_closed_form(double energy, const TrapLaserConfig& cfg) {
  const double half_gamma = 0.5 * kMg.gamma();
  const double a = half_gamma * std::sqrt(1 + cfg.saturation);
  const double b = kMg.wavenumber() * std::sqrt(2 * energy / kMg.mass);
  const std::complex<double> z(cfg.detuning, -a);
  std::complex<double> w = std::sqrt(z * z - b * b);
  if (w.imag() * z.imag() < 0) w = -w;
  return half_gamma * cfg.saturation * half_gamma * half_gamma * (1.0 / w).imag() / a;
}

}  // namespace

TEST_CASE("rate at rest") {
  CHECK(scattering_rate_at_rest(kMg, trap_at(4.02e6)) == doctest::Approx(40364049.05957093).epsilon(1e-12));
}

TEST_CASE("period-averaged rate against high-precision quadrature") {
  const auto cfg = trap_at(4.02e6);
  const double q = quantum(cfg);
  CHECK(scattering_rate_at_energy(5 * q, kMg, cfg) == doctest::Approx(40413687.418526658).epsilon(1e-8));
  CHECK(scattering_rate_at_energy(1000 * q, kMg, cfg) == doctest::Approx(35055876.784937838).epsilon(1e-8));
  CHECK(scattering_rate_at_energy(15500 * q, kMg, cfg) == doctest::Approx(10941414.617884936).epsilon(1e-8));
  CHECK(scattering_rate_at_energy(1000 * q, kMg, trap_at(4.02e6, -0.2)) ==
        doctest::Approx(35491261.956257457).epsilon(1e-8));
}

TEST_CASE("period-averaged rate against the closed form") {
  for (double dl : {-0.1, -0.5, -1.3}) {
    const auto cfg = trap_at(4.02e6, dl);
    for (double x : {0.5, 20.0, 300.0, 4000.0, 50000.0}) {
      const double e = x * quantum(cfg);
      CAPTURE(dl);
      CAPTURE(x);
      CHECK(scattering_rate_at_energy(e, kMg, cfg) == doctest::Approx(averaged_rate_closed_form(e, cfg)).epsilon(1e-8));
    }
  }
}

TEST_CASE("energy balance against high-precision quadrature") {
  const auto cfg = trap_at(4.02e6);
  const double q = quantum(cfg);
  CHECK(energy_rate(5 * q, kMg, cfg) == doctest::Approx(1.8121515365256712e-22).epsilon(1e-6));
  CHECK(energy_rate(1000 * q, kMg, cfg) == doctest::Approx(-2.9821240442981234e-19).epsilon(1e-7));
  CHECK(energy_rate(15500 * q, kMg, cfg) == doctest::Approx(-1.4429995044288664e-19).epsilon(1e-7));
  CHECK(cooling_power_at_energy(0, kMg, cfg) == 0.0);
  CHECK(recoil_heating_power(0, kMg, cfg) > 0);
}

TEST_CASE("Doppler steady state") {
  CHECK(steady_state_energy(kMg, trap_at(2.86e6)) / quantum(trap_at(2.86e6)) ==
        doctest::Approx(7.37971450381).epsilon(1e-8));
  CHECK(steady_state_energy(kMg, trap_at(4.02e6)) / quantum(trap_at(4.02e6)) ==
        doctest::Approx(5.25024464699).epsilon(1e-8));
  CHECK(steady_state_energy(kMg, trap_at(5.25e6)) / quantum(trap_at(5.25e6)) ==
        doctest::Approx(4.0201873297).epsilon(1e-8));
  try {
    steady_state_energy(kMg, trap_at(4.02e6, 0.2));
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
  }
}

TEST_CASE("averaged rate overshoots the rest rate by about 2.1% at -Gamma/2") {
  const auto cfg = trap_at(4.02e6);
  const double rest = scattering_rate_at_rest(kMg, cfg);
  double best = 0;
  for (double x = 50; x < 400; x *= 1.02) best = std::max(best, scattering_rate_at_energy(x * quantum(cfg), kMg, cfg));
  CHECK(best / rest - 1 == doctest::Approx(0.0211988).epsilon(2e-3));
}

TEST_CASE("recooling energy decreases monotonically to the steady state") {
  for (double dl : {-0.1, -0.3, -0.5}) {
    const auto cfg = trap_at(4.02e6, dl);
    std::vector<double> t;
    for (int i = 0; i <= 400; ++i) t.push_back(i * 10e-6);
    const auto e = recool_energy(15500 * quantum(cfg), kMg, cfg, t);
    // Integrator jitter at the fixed point is allowed, relative to the starting energy.
    for (std::size_t i = 1; i < e.size(); ++i) CHECK(e[i] <= e[i - 1] + 1e-9 * e.front());
    CHECK(e.back() >= steady_state_energy(kMg, cfg) * (1 - 1e-6));
  }
}

TEST_CASE("propagator follows the direct ODE solution") {
  const auto cfg = trap_at(4.02e6);
  RecoolPropagator prop(kMg, cfg, 40000);
  CHECK(prop.steady_state_quanta() == doctest::Approx(5.25024464699).epsilon(1e-7));
  const std::vector<double> t{0.0, 1e-4, 5e-4, 1e-3, 2e-3};
  for (double x0 : {0.0, 2.0, 300.0, 15500.0}) {
    const auto e = recool_energy(x0 * quantum(cfg), kMg, cfg, t);
    for (std::size_t i = 0; i < t.size(); ++i) {
      CAPTURE(x0);
      CAPTURE(t[i]);
      CHECK(prop.quanta_after(x0, t[i]) == doctest::Approx(e[i] / quantum(cfg)).epsilon(1e-5));
    }
  }
}

TEST_CASE("thermal average against direct integration over the Boltzmann law") {
  const auto cfg = trap_at(4.02e6);
  RecoolPropagator prop(kMg, cfg, 200000);
  const double mean = 3000;
  const std::vector<double> t{0.0, 2e-4, 1e-3, 3e-3};
  const auto fast = prop.thermal_scattering_rate(mean, t);
  for (std::size_t i = 0; i < t.size(); ++i) {
    // Midpoint rule in u = 1 - exp(-x/mean) on a fine grid.
    const int n = 200000;
    double acc = 0;
    for (int k = 0; k < n; ++k) {
      const double u = (k + 0.5) / n;
      acc += prop.scattering_rate_after(-mean * std::log1p(-u), t[i]);
    }
    CAPTURE(t[i]);
    // The landing of hot trajectories is a sharp feature in x0; the shared node set resolves it to ~1e-3.
    CHECK(fast[i] == doctest::Approx(acc / n).epsilon(1e-3));
  }
}

TEST_CASE("noiseless trace is recovered by the fit") {
  const auto cfg = trap_at(4.02e6);
  const double mean = 3105;
  RecoolPropagator prop(kMg, cfg, 60 * mean + 100);
  const std::size_t bins = 500;
  const double w = 10e-6, reps = 400;
  std::vector<double> t;
  for (std::size_t i = 0; i < bins; ++i) {
    t.push_back(i * w);
    t.push_back((i + 0.5) * w);
    t.push_back((i + 1) * w);
  }
  const auto r = prop.thermal_scattering_rate(mean, t);
  RecoolTrace tr;
  tr.repeats = 400;
  for (std::size_t i = 0; i <= bins; ++i) tr.bin_edges.push_back(i * w);
  for (std::size_t i = 0; i < bins; ++i) {
    tr.counts.push_back(reps * cfg.detection_efficiency * w * (r[3 * i] + 4 * r[3 * i + 1] + r[3 * i + 2]) / 6);
  }
  const auto fit = fit_recool(tr, kMg, cfg);
  CHECK(fit.nbar0 == doctest::Approx(mean).epsilon(1e-3));
  CHECK(fit.scale == doctest::Approx(cfg.detection_efficiency * prop.scattering_rate(prop.steady_state_quanta())).epsilon(1e-3));
  CHECK(fit.nbar0_ensemble_stderr == doctest::Approx(fit.nbar0 / 20));
  CHECK(fit.nbar0_stderr == doctest::Approx(std::hypot(fit.nbar0_fit_stderr, fit.nbar0_ensemble_stderr)));
}

TEST_CASE("fit rejects unusable traces") {
  const auto cfg = trap_at(4.02e6);
  RecoolTrace tr;
  for (int i = 0; i <= 50; ++i) tr.bin_edges.push_back(i * 1e-5);
  tr.counts.assign(50, 0.0);
  try {
    fit_recool(tr, kMg, cfg);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::data_quality);
  }
  tr.counts.assign(5, 1.0);
  tr.bin_edges.resize(6);
  CHECK_THROWS_AS(fit_recool(tr, kMg, cfg), Error);
  tr.bin_edges = {0, 1, 1, 2, 3, 4};
  CHECK_THROWS_AS(tr.validate(), Error);
}
