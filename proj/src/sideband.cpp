#include "iontrap/sideband.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "iontrap/constants.hpp"
#include "iontrap/error.hpp"
#include "iontrap/least_squares.hpp"
#include "iontrap/recool.hpp"

namespace iontrap {

namespace c = constants;

const char* to_string(Sideband sb) {
  switch (sb) {
    case Sideband::red: return "red";
    case Sideband::carrier: return "carrier";
    case Sideband::blue: return "blue";
  }
  return "unknown";
}

double RabiDrive::rabi_frequency(std::size_t n, Sideband sb) const {
  switch (sb) {
    case Sideband::red: return rabi_base * eta * std::sqrt(static_cast<double>(n));
    case Sideband::carrier: return rabi_base;
    case Sideband::blue: return rabi_base * eta * std::sqrt(static_cast<double>(n) + 1.0);
  }
  return 0.0;
}

double RabiDrive::red_pi_time() const { return c::pi / (rabi_base * eta); }

RabiDrive make_drive(const IonSpecies& species, const TrapLaserConfig& cfg, const RamanSettings& raman) {
  if (!(raman.red_pi_time > 0)) throw Error(ErrorKind::config, "sideband", "red_pi_time must be > 0");
  RabiDrive d;
  d.eta = lamb_dicke(species, cfg);
  if (!(d.eta > 0)) throw Error(ErrorKind::config, "sideband", "Lamb-Dicke parameter must be > 0");
  d.rabi_base = c::pi / (d.eta * raman.red_pi_time);
  d.decay_tau = raman.decay_periods * 2.0 * raman.red_pi_time;
  return d;
}

double thermal_pn(double nbar, std::size_t n) {
  if (!(nbar >= 0)) throw Error(ErrorKind::config, "sideband", "nbar must be >= 0");
  if (nbar == 0) return n == 0 ? 1.0 : 0.0;
  // log p_n = n log(nbar/(nbar+1)) - log(nbar+1)
  const double log_q = std::log(nbar) - std::log1p(nbar);
  return std::exp(static_cast<double>(n) * log_q - std::log1p(nbar));
}

std::size_t thermal_cutoff(double nbar, double tail) {
  if (!(nbar >= 0)) throw Error(ErrorKind::config, "sideband", "nbar must be >= 0");
  if (nbar == 0) return 0;
  const double log_q = std::log(nbar) - std::log1p(nbar);
  // 1 - q^(n+1) > 1 - tail  <=>  n + 1 > log(tail) / log(q)
  const double n = std::floor(std::log(tail) / log_q);
  return static_cast<std::size_t>(std::max(0.0, n));
}

double level_flip_probability(std::size_t n, Sideband sb, double duration, const RabiDrive& drive,
                              double detuning) {
  if (duration < 0) throw Error(ErrorKind::config, "sideband", "pulse duration must be >= 0");
  const double omega = drive.rabi_frequency(n, sb);
  if (omega == 0 || duration == 0) return 0.0;
  const double w2 = omega * omega + detuning * detuning;
  const double w = std::sqrt(w2);
  const double envelope = drive.decay_tau > 0 ? std::exp(-duration / drive.decay_tau) : 1.0;
  return omega * omega / w2 * 0.5 * (1.0 - envelope * std::cos(w * duration));
}

double flip_probability(const ThermalState& state, Sideband sb, double duration, const RabiDrive& drive,
                        double detuning, std::size_t n_max) {
  if (!(state.nbar >= 0)) throw Error(ErrorKind::config, "sideband", "nbar must be >= 0");
  double sum = 0;
  for (std::size_t n = 0; n <= n_max; ++n) {
    sum += thermal_pn(state.nbar, n) * level_flip_probability(n, sb, duration, drive, detuning);
  }
  return sum;
}

double flip_probability(const ThermalState& state, Sideband sb, double duration, const RabiDrive& drive,
                        double detuning) {
  return flip_probability(state, sb, duration, drive, detuning, thermal_cutoff(state.nbar));
}

void SidebandScan::validate() const {
  if (detunings.size() != signal.size() || detunings.size() != standard_error.size()) {
    throw Error(ErrorKind::data_quality, "sideband", "scan columns differ in length");
  }
  for (std::size_t i = 1; i < detunings.size(); ++i) {
    if (!(detunings[i] > detunings[i - 1])) {
      throw Error(ErrorKind::data_quality, "sideband", "scan detunings must be strictly increasing");
    }
  }
  for (std::size_t i = 0; i < signal.size(); ++i) {
    if (standard_error[i] < 0 || (signal[i] > 0 && !(standard_error[i] > 0))) {
      throw Error(ErrorKind::data_quality, "sideband", "standard error must be > 0 where signal > 0");
    }
  }
}

SidebandScan synth_scan(const ThermalState& state, const IonSpecies& species, const TrapLaserConfig& cfg,
                        const RabiDrive& drive, const ScanSettings& settings,
                        std::span<const double> detuning_grid_hz) {
  require_valid(cfg, species);
  if (settings.shots < 1) throw Error(ErrorKind::config, "sideband", "shots must be >= 1");
  const double f_trap = cfg.motional_frequency / c::two_pi;
  const double bright = scattering_rate_at_rest(species, cfg) * cfg.detection_efficiency * settings.detect_duration;
  const double dark = cfg.background_rate * settings.detect_duration;
  const std::size_t n_max = thermal_cutoff(state.nbar);

  SidebandScan scan;
  scan.probe_duration = settings.probe_duration;
  for (double d_hz : detuning_grid_hz) {
    double p = flip_probability(state, Sideband::red, settings.probe_duration, drive, c::two_pi * (d_hz + f_trap), n_max) +
               flip_probability(state, Sideband::blue, settings.probe_duration, drive, c::two_pi * (d_hz - f_trap), n_max);
    if (settings.include_carrier) {
      p += flip_probability(state, Sideband::carrier, settings.probe_duration, drive, c::two_pi * d_hz, n_max);
    }
    p = std::min(p, 1.0);
    const double mean = bright * p + dark;
    const double var = bright * p + bright * bright * p * (1.0 - p) + dark;
    scan.detunings.push_back(d_hz);
    scan.signal.push_back(mean);
    scan.standard_error.push_back(std::sqrt(var / static_cast<double>(settings.shots)));
  }
  scan.validate();
  return scan;
}

std::vector<double> sideband_grid(double trap_frequency_hz, double half_window_hz, std::size_t points) {
  if (!(trap_frequency_hz > 0) || !(half_window_hz > 0) || half_window_hz >= 0.5 * trap_frequency_hz ||
      points < 4) {
    throw Error(ErrorKind::config, "sideband", "grid needs f > 0, 0 < half window < f/2 and >= 4 points");
  }
  std::vector<double> grid;
  auto window = [&](double centre) {
    for (std::size_t i = 0; i < points; ++i) {
      grid.push_back(centre - half_window_hz + 2.0 * half_window_hz * static_cast<double>(i) /
                                                   static_cast<double>(points - 1));
    }
  };
  window(-trap_frequency_hz);
  // Sparse samples between the sidebands show the carrier.
  const double inner = trap_frequency_hz - half_window_hz;
  const std::size_t carrier_points = 21;
  for (std::size_t i = 1; i < carrier_points - 1; ++i) {
    grid.push_back(-inner + 2.0 * inner * static_cast<double>(i) / static_cast<double>(carrier_points - 1));
  }
  window(trap_frequency_hz);
  return grid;
}

double nbar_from_ratio(double ratio) {
  if (!std::isfinite(ratio)) throw Error(ErrorKind::data_quality, "sideband", "ratio is not finite");
  if (ratio >= 1.0) {
    throw Error(ErrorKind::infinite_temperature, "sideband",
                "sideband ratio R >= 1 implies infinite temperature");
  }
  if (ratio < 0) throw Error(ErrorKind::data_quality, "sideband", "sideband ratio must be >= 0");
  return ratio / (1.0 - ratio);
}

double ratio_from_nbar(double nbar) {
  if (!(nbar >= 0)) throw Error(ErrorKind::config, "sideband", "nbar must be >= 0");
  return nbar / (nbar + 1.0);
}

void ratio_thermometry(SidebandFit& fit) {
  if (!(fit.blue_amplitude > 0)) {
    throw Error(ErrorKind::data_quality, "sideband", "blue sideband amplitude is zero; ratio undefined");
  }
  if (fit.red_amplitude < 0) {
    throw Error(ErrorKind::data_quality, "sideband", "red sideband amplitude is negative");
  }
  fit.ratio = fit.red_amplitude / fit.blue_amplitude;
  fit.ratio_stderr = std::hypot(fit.red_amplitude_stderr, fit.ratio * fit.blue_amplitude_stderr) / fit.blue_amplitude;
  fit.nbar = nbar_from_ratio(fit.ratio);
  const double one_minus = 1.0 - fit.ratio;
  fit.nbar_stderr = fit.ratio_stderr / (one_minus * one_minus);
  fit.flagged = false;
  fit.flag_reason.clear();
  if (fit.ratio > 0.9) {
    fit.flagged = true;
    fit.flag_reason = "R > 0.9: nbar = R/(1-R) is near its pole";
  } else if (fit.nbar_stderr > fit.nbar) {
    fit.flagged = true;
    fit.flag_reason = "nbar not resolved (relative error above 100%)";
  }
}

namespace {

struct GaussianFit {
  double amplitude, amplitude_stderr, center, width, reduced_chi2;
};

struct Window {
  std::vector<double> x, y, sigma;
  double lo, hi;
};

Window select_window(const SidebandScan& scan, double centre, double half, double sigma_floor) {
  Window w{{}, {}, {}, centre - half, centre + half};
  for (std::size_t i = 0; i < scan.size(); ++i) {
    if (std::abs(scan.detunings[i] - centre) <= half) {
      w.x.push_back(scan.detunings[i]);
      w.y.push_back(scan.signal[i]);
      w.sigma.push_back(std::max(scan.standard_error[i], sigma_floor));
    }
  }
  return w;
}

std::string describe(const char* name, const Window& w) {
  std::ostringstream msg;
  msg << name << " window [" << w.lo << ", " << w.hi << "] Hz with " << w.x.size() << " points";
  return msg.str();
}

// Gaussian a exp(-(x-c)^2 / (2 w^2)); centre and width optionally held fixed.
GaussianFit fit_gaussian(const Window& w, double a0, double c0, double w0, bool amplitude_only, const char* name) {
  const int n = static_cast<int>(w.x.size());
  const int n_params = amplitude_only ? 1 : 3;
  if (n < n_params + 1) {
    throw Error(ErrorKind::data_quality, "sideband", describe(name, w) + ": too few points");
  }
  // Work in units of the initial width so all parameters are O(1).
  const double xs = std::abs(w0);
  ResidualFunction residual = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    const double a = p[0];
    const double centre = amplitude_only ? c0 : c0 + p[1] * xs;
    const double width = amplitude_only ? w0 : p[2] * xs;
    for (int i = 0; i < n; ++i) {
      const double z = (w.x[static_cast<std::size_t>(i)] - centre) / width;
      r[i] = (w.y[static_cast<std::size_t>(i)] - a * std::exp(-0.5 * z * z)) / w.sigma[static_cast<std::size_t>(i)];
    }
  };
  Eigen::VectorXd start(n_params);
  start[0] = a0;
  if (!amplitude_only) {
    start[1] = 0.0;
    start[2] = 1.0;
  }
  LsqOptions opt;
  opt.fd_floor = 1e-7;
  LsqResult res;
  try {
    res = levenberg_marquardt(residual, n, start, opt, "sideband fit");
  } catch (const Error& e) {
    throw Error(e.kind(), "sideband", describe(name, w) + ": " + e.what());
  }
  GaussianFit out;
  out.amplitude = res.params[0];
  out.amplitude_stderr = res.stderr_of(0);
  out.center = amplitude_only ? c0 : c0 + res.params[1] * xs;
  out.width = amplitude_only ? std::abs(w0) : std::abs(res.params[2] * xs);
  out.reduced_chi2 = res.reduced_chi2();
  return out;
}

}  // namespace

SidebandFit fit_scan(const SidebandScan& scan, double trap_frequency_hz, const ScanFitOptions& options) {
  scan.validate();
  if (!(trap_frequency_hz > 0)) throw Error(ErrorKind::config, "sideband", "trap frequency must be > 0");
  double half = options.half_window;
  if (!(half > 0)) {
    half = scan.probe_duration > 0 ? std::min(0.75 / scan.probe_duration, 0.45 * trap_frequency_hz)
                                   : 0.25 * trap_frequency_hz;
  }
  double floor = 0;
  for (double s : scan.standard_error) {
    if (s > 0) floor = floor == 0 ? s : std::min(floor, s);
  }
  if (!(floor > 0)) throw Error(ErrorKind::data_quality, "sideband", "scan carries no positive standard errors");

  const Window blue_w = select_window(scan, trap_frequency_hz, half, floor);
  const Window red_w = select_window(scan, -trap_frequency_hz, half, floor);
  const double width0 = scan.probe_duration > 0 ? 0.35 / scan.probe_duration : half / 4;

  auto peak = [](const Window& w) {
    double a = 0;
    for (double v : w.y) a = std::max(a, v);
    return a;
  };
  if (blue_w.x.empty() || !(peak(blue_w) > 0)) {
    throw Error(ErrorKind::data_quality, "sideband", describe("blue", blue_w) + ": no blue sideband signal");
  }

  const auto blue = fit_gaussian(blue_w, peak(blue_w), trap_frequency_hz, width0, false, "blue");
  if (!(blue.amplitude > 0)) {
    throw Error(ErrorKind::data_quality, "sideband", describe("blue", blue_w) + ": blue amplitude is not positive");
  }
  // Red starts from the mirror image of the blue line about the carrier.
  const double red_c0 = -blue.center;
  bool borrowed = options.shared_width;
  GaussianFit red{};
  if (!borrowed) {
    // A weak or absent red line leaves centre and width undetermined; then fall
    // back to the mirrored blue shape.
    try {
      red = fit_gaussian(red_w, std::max(peak(red_w), 1e-3 * blue.amplitude), red_c0, blue.width, false, "red");
      borrowed = std::abs(red.center - red_c0) > half || red.width > half || red.width < 0.1 * blue.width;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::fit_convergence) throw;
      borrowed = true;
    }
  }
  if (borrowed) red = fit_gaussian(red_w, peak(red_w), red_c0, blue.width, true, "red");

  SidebandFit fit;
  fit.red_amplitude = red.amplitude;
  fit.red_amplitude_stderr = red.amplitude_stderr;
  fit.blue_amplitude = blue.amplitude;
  fit.blue_amplitude_stderr = blue.amplitude_stderr;
  fit.red_center = red.center;
  fit.blue_center = blue.center;
  fit.red_width = red.width;
  fit.blue_width = blue.width;
  fit.red_reduced_chi2 = red.reduced_chi2;
  fit.blue_reduced_chi2 = blue.reduced_chi2;
  fit.red_window = {red_w.lo, red_w.hi};
  fit.red_shape_from_blue = borrowed;
  fit.blue_window = {blue_w.lo, blue_w.hi};
  ratio_thermometry(fit);
  return fit;
}

}  // namespace iontrap
