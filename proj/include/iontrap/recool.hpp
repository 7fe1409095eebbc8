#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "iontrap/config.hpp"

namespace iontrap {

/// Binned photon counts for one delay setting, summed over repeats.
struct RecoolTrace {
  double delay = 0;               // s
  std::vector<double> bin_edges;  // s since the cooling beam was switched on
  std::vector<double> counts;     // photon counts (integers for measured data)
  std::size_t repeats = 1;

  std::size_t bins() const { return counts.size(); }
  double bin_width(std::size_t i) const { return bin_edges[i + 1] - bin_edges[i]; }
  double total_counts() const;
  /// Throws Error(data_quality) when edges/counts are inconsistent.
  void validate() const;
};

struct RecoolFit {
  double E0 = 0;            // J, (mean) energy at the start of recooling
  double E0_stderr = 0;     // J
  double nbar0 = 0;         // E0 / (hbar omega)
  double nbar0_stderr = 0;          // fit and ensemble terms in quadrature
  double nbar0_fit_stderr = 0;      // photon counting only
  double nbar0_ensemble_stderr = 0; // finite number of repeats (thermal model)
  double scale = 0;         // steady-state detected counts/s
  double scale_stderr = 0;
  double background = 0;    // counts/s
  double background_stderr = 0;
  double reduced_chi2 = 0;
  int dof = 0;
  int iterations = 0;
};

/// How the fit model treats the initial energy.
enum class RecoolModel {
  thermal,        // Boltzmann-distributed initial energy with mean E0 (ensemble over repeats)
  single_energy,  // every repeat starts at exactly E0
};

struct RecoolFitOptions {
  RecoolModel model = RecoolModel::thermal;
  bool fit_background = false;
  double fixed_background = 0.0;  // counts/s, used when fit_background is false
  int max_iterations = 200;
};

// Semi-classical 1D Doppler model. Energies in J, rates in photons/s scattered
// (not yet multiplied by detection efficiency).

/// (Gamma/2) s / (1 + s + (2 delta_eff / Gamma)^2).
double lorentzian_rate(double effective_detuning, const IonSpecies& species, const TrapLaserConfig& cfg);
double scattering_rate_at_rest(const IonSpecies& species, const TrapLaserConfig& cfg);

/// Lorentzian rate averaged over one oscillation at energy E, by adaptive quadrature.
double scattering_rate_at_energy(double energy, const IonSpecies& species, const TrapLaserConfig& cfg);

/// Period-averaged <hbar k v rho(v)>; negative (cooling) for red detuning.
double cooling_power_at_energy(double energy, const IonSpecies& species, const TrapLaserConfig& cfg);

/// (hbar k)^2 (1 + xi) / (2m) * averaged rate.
double recoil_heating_power(double energy, const IonSpecies& species, const TrapLaserConfig& cfg);

/// dE/dt = cooling power + recoil heating.
double energy_rate(double energy, const IonSpecies& species, const TrapLaserConfig& cfg);

/// Doppler-limit energy where dE/dt = 0. Throws Error(config) without red detuning.
double steady_state_energy(const IonSpecies& species, const TrapLaserConfig& cfg);

/// E(t) by adaptive Dormand-Prince integration from E0, reported at t_grid.
std::vector<double> recool_energy(double E0, const IonSpecies& species, const TrapLaserConfig& cfg,
                                  std::span<const double> t_grid);

/// Expected detected counts/s, efficiency * rate(E(t)) + background, on t_grid.
std::vector<double> recool_curve(double E0, const IonSpecies& species, const TrapLaserConfig& cfg,
                                 std::span<const double> t_grid);

/// Tabulated master trajectories of the (autonomous) energy ODE.
///
/// Every solution is a time shift of one of two master solutions: one cooling
/// down from `max_quanta`, one heating up from rest. Looking a trajectory up is
/// then two interpolations instead of an ODE solve. Energies are in quanta
/// (E / hbar omega).
class RecoolPropagator {
 public:
  RecoolPropagator(const IonSpecies& species, const TrapLaserConfig& cfg, double max_quanta);
  ~RecoolPropagator();
  RecoolPropagator(RecoolPropagator&&) noexcept;
  RecoolPropagator& operator=(RecoolPropagator&&) noexcept;

  double steady_state_quanta() const;
  double max_quanta() const;

  /// Energy (quanta) a time t after starting from x0 quanta.
  double quanta_after(double x0, double t) const;
  /// Scattered photons/s (not efficiency-scaled) at energy x quanta.
  double scattering_rate(double x) const;
  /// Scattered photons/s at time t after starting from x0 quanta.
  double scattering_rate_after(double x0, double t) const;

  /// Scattering rate at each time, averaged over a Boltzmann distribution of
  /// initial energies with mean `mean_quanta`.
  std::vector<double> thermal_scattering_rate(double mean_quanta, std::span<const double> times) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Weighted least squares of the recool model against a trace. Poisson weights max(counts, 1).
/// Rejects (data_quality) traces with < 10 bins or no counts; fit failures are fit_convergence.
RecoolFit fit_recool(const RecoolTrace& trace, const IonSpecies& species, const TrapLaserConfig& cfg,
                     const RecoolFitOptions& options = {});

}  // namespace iontrap
