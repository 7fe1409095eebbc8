#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "iontrap/config.hpp"

namespace iontrap {

enum class Sideband { red, carrier, blue };

const char* to_string(Sideband sb);

struct ThermalState {
  double nbar = 0;
};

/// Raman drive parameters shared by sideband cooling and probing.
struct RabiDrive {
  double rabi_base = 0;   // carrier Rabi frequency, rad/s
  double eta = 0;         // Lamb-Dicke parameter
  double decay_tau = 0;   // coherence decay time, s; <= 0 disables decay

  /// Rabi frequency coupling level n on the given line (0 when the line does not exist).
  double rabi_frequency(std::size_t n, Sideband sb) const;
  /// Duration of a pi pulse on the red sideband from n = 1.
  double red_pi_time() const;
};

/// Drive whose red pi time from n = 1 is `raman.red_pi_time`, with the decay
/// time set to `raman.decay_periods` red Rabi periods.
RabiDrive make_drive(const IonSpecies& species, const TrapLaserConfig& cfg, const RamanSettings& raman);

/// nbar^n / (nbar + 1)^(n + 1).
double thermal_pn(double nbar, std::size_t n);

/// Smallest n_max with cumulative thermal probability above 1 - tail.
std::size_t thermal_cutoff(double nbar, double tail = 1e-9);

/// Flip probability of a single level n for a pulse of `duration` detuned by
/// `detuning` (rad/s) from the line centre:
///   Omega^2/W^2 * (1 - exp(-t/tau) cos(W t)) / 2,  W^2 = Omega^2 + detuning^2.
double level_flip_probability(std::size_t n, Sideband sb, double duration, const RabiDrive& drive,
                              double detuning = 0.0);

/// Thermal average of level_flip_probability, truncated adaptively at thermal_cutoff.
double flip_probability(const ThermalState& state, Sideband sb, double duration, const RabiDrive& drive,
                        double detuning = 0.0);
double flip_probability(const ThermalState& state, Sideband sb, double duration, const RabiDrive& drive,
                        double detuning, std::size_t n_max);

/// Fluorescence vs Raman detuning around the carrier.
struct SidebandScan {
  std::vector<double> detunings;  // Hz relative to the carrier
  std::vector<double> signal;     // mean counts per experiment
  std::vector<double> standard_error;  // of the mean, counts
  double probe_duration = 0;      // s

  std::size_t size() const { return detunings.size(); }
  void validate() const;
};

struct SidebandFit {
  double red_amplitude = 0, red_amplitude_stderr = 0;
  double blue_amplitude = 0, blue_amplitude_stderr = 0;
  double red_center = 0, blue_center = 0;  // Hz
  double red_width = 0, blue_width = 0;    // Hz, Gaussian sigma
  double ratio = 0, ratio_stderr = 0;
  double nbar = 0, nbar_stderr = 0;
  double red_reduced_chi2 = 0, blue_reduced_chi2 = 0;
  std::pair<double, double> red_window, blue_window;  // Hz
  /// Red fitted with the mirrored blue centre and width (shared_width, or no resolvable red line).
  bool red_shape_from_blue = false;
  /// Set when R is close to 1 or nbar is not resolved (relative error above 100%).
  bool flagged = false;
  std::string flag_reason;
};

struct ScanFitOptions {
  double half_window = 0;    // Hz around each sideband; 0 picks 0.75 / probe_duration (main lobe) capped at 0.45 f_trap
  bool shared_width = false; // fit red with blue's width and mirrored centre (amplitude only)
};

struct ScanSettings {
  double probe_duration = 0;   // s
  double detect_duration = 50e-6;
  std::size_t shots = 1400;    // experiments averaged per point
  bool include_carrier = true;
};

/// Expected scan with per-point standard errors for `shots` experiments.
SidebandScan synth_scan(const ThermalState& state, const IonSpecies& species, const TrapLaserConfig& cfg,
                        const RabiDrive& drive, const ScanSettings& settings,
                        std::span<const double> detuning_grid_hz);

/// Detuning grid with `points` samples across each sideband window and a sparse carrier region.
std::vector<double> sideband_grid(double trap_frequency_hz, double half_window_hz, std::size_t points);

/// Independent Gaussian fits to the red and blue sidebands, then R = red/blue and nbar = R/(1-R).
SidebandFit fit_scan(const SidebandScan& scan, double trap_frequency_hz, const ScanFitOptions& options = {});

/// nbar = R / (1 - R). Throws Error(infinite_temperature) for R >= 1.
double nbar_from_ratio(double ratio);
double ratio_from_nbar(double nbar);

/// First-order propagation of the amplitude errors into R and nbar.
void ratio_thermometry(SidebandFit& fit);

}  // namespace iontrap
