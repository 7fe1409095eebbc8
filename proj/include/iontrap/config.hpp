#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace iontrap {

/// Two-level cycling transition of a trapped ion species.
struct IonSpecies {
  std::string name;
  double mass = 0;                   // kg
  double transition_wavelength = 0;  // m
  double natural_linewidth = 0;      // Hz, full width Gamma/2pi

  /// Gamma in rad/s.
  double gamma() const;
  /// Optical wavenumber 2pi/lambda of a single beam, 1/m.
  double wavenumber() const;

  /// 25Mg+ on the 280 nm S1/2 <-> P3/2 cycling line.
  static IonSpecies mg25();
};

/// Trap, Doppler beam and detector settings. All members in SI units.
struct TrapLaserConfig {
  double motional_frequency = 0;         // rad/s
  double ion_electrode_distance = 40e-6; // m
  double detuning = 0;                   // rad/s, laser minus atom; negative is red
  double saturation = 0.9;
  double beam_axis_cosine = 1.0;         // Raman wavevector-difference projection
  double detection_efficiency = 1e-3;
  double background_rate = 0.0;          // detected counts/s
  double weak_binding_fraction = 0.25;   // require omega < fraction * Gamma
  double recoil_geometry_factor = 0.4;   // xi in the recoil heating term
  double quadrature_rtol = 1e-8;
  double ode_rtol = 1e-8;

  /// Detuning -Gamma/2 for the given species, default saturation.
  static TrapLaserConfig doppler_default(const IonSpecies& species, double motional_frequency);
};

/// Raman probing and sideband-cooling sequence settings.
struct RamanSettings {
  double red_pi_time = 5e-6;     // s, pi time on the red sideband from n = 1
  double decay_periods = 1.0;    // decay time in units of the n = 1 red Rabi period
  double detect_duration = 50e-6;
  double doppler_duration = 300e-6;
  double repump_duration = 20e-6;
  int cooling_cycles = 30;
  std::size_t shots = 1400;
};

struct DelaySchedule {
  std::vector<double> delays;  // s
  std::size_t repeats_per_delay = 1;
};

struct ConfigViolation {
  std::string field;
  std::string message;
};

/// eta = k_eff sqrt(hbar / (2 m omega)), k_eff = sqrt(2) (2pi/lambda) * beam_axis_cosine.
double lamb_dicke(const IonSpecies& species, const TrapLaserConfig& cfg);

/// Empty iff every invariant and the weak-binding bound hold.
std::vector<ConfigViolation> validate_config(const TrapLaserConfig& cfg, const IonSpecies& species);
std::vector<ConfigViolation> validate_species(const IonSpecies& species);
std::vector<ConfigViolation> validate_schedule(const DelaySchedule& schedule);

/// Throws Error(config) listing every violation.
void require_valid(const TrapLaserConfig& cfg, const IonSpecies& species);

// JSON with unit-suffixed keys ("motional_frequency_mhz", "mass_amu", ...).
IonSpecies species_from_json(const nlohmann::json& j);
nlohmann::json species_to_json(const IonSpecies& species);
TrapLaserConfig trap_from_json(const nlohmann::json& j, const IonSpecies& species);
nlohmann::json trap_to_json(const TrapLaserConfig& cfg);
RamanSettings raman_from_json(const nlohmann::json& j);
nlohmann::json raman_to_json(const RamanSettings& raman);

}  // namespace iontrap
