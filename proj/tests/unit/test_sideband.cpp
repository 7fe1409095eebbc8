#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "iontrap/constants.hpp"
#include "iontrap/error.hpp"
#include "iontrap/sideband.hpp"

using namespace iontrap;
namespace c = iontrap::constants;

namespace {

struct Setup {
  IonSpecies species = IonSpecies::mg25();
  TrapLaserConfig cfg;
  RamanSettings raman;
  RabiDrive drive;
  double f = 5.25e6;
  Setup() {
    cfg = TrapLaserConfig::doppler_default(species, c::two_pi * f);
    drive = make_drive(species, cfg, raman);
  }
  SidebandScan scan(double nbar, std::size_t shots = 1400) const {
    ScanSettings st;
    st.probe_duration = drive.red_pi_time();
    st.shots = shots;
    const auto grid = sideband_grid(f, std::min(0.75 / st.probe_duration, 0.45 * f), 21);
    return synth_scan({nbar}, species, cfg, drive, st, grid);
  }
};

}  // namespace

TEST_CASE("drive from settings") {
  Setup s;
  CHECK(s.drive.red_pi_time() == doctest::Approx(s.raman.red_pi_time));
  CHECK(s.drive.decay_tau == doctest::Approx(2 * s.raman.red_pi_time));
  CHECK(s.drive.rabi_frequency(0, Sideband::red) == 0.0);
  CHECK(s.drive.rabi_frequency(3, Sideband::blue) == doctest::Approx(s.drive.rabi_frequency(4, Sideband::red)));
}

TEST_CASE("thermal populations") {
  CHECK(thermal_pn(0.34, 0) == doctest::Approx(1 / 1.34));
  CHECK(thermal_pn(0.34, 2) == doctest::Approx(0.34 * 0.34 / std::pow(1.34, 3)));
  CHECK(thermal_pn(0, 0) == 1.0);
  CHECK(thermal_pn(0, 1) == 0.0);
  double sum = 0;
  for (std::size_t n = 0; n <= thermal_cutoff(3.0); ++n) sum += thermal_pn(3.0, n);
  CHECK(sum > 1 - 1e-9);
  CHECK_THROWS_AS(thermal_pn(-1, 0), Error);
}

TEST_CASE("thermal flip probabilities against series evaluation") {
  Setup s;
  const double t = s.drive.red_pi_time();
  CHECK(flip_probability({0.34}, Sideband::blue, t, s.drive) == doctest::Approx(0.72751966016531247).epsilon(1e-9));
  CHECK(flip_probability({0.34}, Sideband::red, t, s.drive) == doctest::Approx(0.18459454063895988).epsilon(1e-9));
  CHECK(flip_probability({1.0}, Sideband::blue, t, s.drive) == doctest::Approx(0.62283920625579494).epsilon(1e-9));
  CHECK(flip_probability({0.34}, Sideband::blue, t, s.drive, 2.0 / t) ==
        doctest::Approx(0.48482161167343692).epsilon(1e-9));
}

TEST_CASE("red/blue ratio equals nbar/(nbar+1) for any pulse") {
  Setup s;
  for (double nbar : {0.05, 0.34, 1.0, 4.0}) {
    for (double tf : {0.3, 1.0, 2.7}) {
      for (double det : {0.0, 1.5}) {
        const double t = tf * s.drive.red_pi_time();
        const double r = flip_probability({nbar}, Sideband::red, t, s.drive, det / t);
        const double b = flip_probability({nbar}, Sideband::blue, t, s.drive, det / t);
        CHECK(r / b == doctest::Approx(nbar / (nbar + 1)).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("ratio conversions") {
  CHECK(nbar_from_ratio(0.5) == doctest::Approx(1.0));
  CHECK(ratio_from_nbar(0.34) == doctest::Approx(0.34 / 1.34));
  CHECK(nbar_from_ratio(ratio_from_nbar(2.5)) == doctest::Approx(2.5));
  try {
    nbar_from_ratio(1.0);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::infinite_temperature);
  }
  CHECK_THROWS_AS(nbar_from_ratio(1.2), Error);
}

TEST_CASE("noiseless scans are read back with small bias") {
  Setup s;
  for (double nbar : {0.06, 0.34, 1.0, 3.5}) {
    const auto fit = fit_scan(s.scan(nbar), s.f);
    CHECK(fit.nbar == doctest::Approx(nbar).epsilon(0.015));
    CHECK(fit.blue_center == doctest::Approx(s.f).epsilon(1e-3));
    CHECK(fit.red_center == doctest::Approx(-s.f).epsilon(1e-3));
  }
}

TEST_CASE("noisy closed loop lands within two standard errors") {
  Setup s;
  std::mt19937_64 rng(424242);
  std::normal_distribution<double> normal;
  for (double nbar : {0.1, 0.34, 1.0, 3.0}) {
    auto scan = s.scan(nbar);
    for (std::size_t i = 0; i < scan.size(); ++i) scan.signal[i] += scan.standard_error[i] * normal(rng);
    const auto fit = fit_scan(scan, s.f);
    CAPTURE(nbar);
    CAPTURE(fit.nbar);
    CAPTURE(fit.nbar_stderr);
    CHECK(std::abs(fit.nbar - nbar) < 2 * fit.nbar_stderr);
  }
}

TEST_CASE("ground state and shared line shape") {
  Setup s;
  CHECK(std::abs(fit_scan(s.scan(0.0), s.f).nbar) < 0.01);
  ScanFitOptions o;
  o.shared_width = true;
  const auto fit = fit_scan(s.scan(0.34), s.f, o);
  CHECK(fit.red_shape_from_blue);
  CHECK(fit.red_width == doctest::Approx(fit.blue_width));
  CHECK(fit.nbar == doctest::Approx(0.34).epsilon(0.03));
}

TEST_CASE("scan validation") {
  SidebandScan bad;
  bad.detunings = {1, 2};
  bad.signal = {1};
  bad.standard_error = {1};
  bad.probe_duration = 1e-6;
  CHECK_THROWS_AS(bad.validate(), Error);
}
