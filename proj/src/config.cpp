#include "iontrap/config.hpp"

#include <cmath>
#include <sstream>

#include "iontrap/constants.hpp"
#include "iontrap/error.hpp"

namespace iontrap {

using nlohmann::json;
namespace c = constants;

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
    case ErrorKind::data_quality: return "data_quality";
    case ErrorKind::degenerate_design: return "degenerate_design";
    case ErrorKind::infinite_temperature: return "infinite_temperature";
    case ErrorKind::fit_convergence: return "fit_convergence";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::io:
      return 2;
    case ErrorKind::data_quality:
    case ErrorKind::degenerate_design:
    case ErrorKind::infinite_temperature:
      return 3;
    case ErrorKind::fit_convergence:
      return 4;
  }
  return 1;
}

double IonSpecies::gamma() const { return c::two_pi * natural_linewidth; }

double IonSpecies::wavenumber() const { return c::two_pi / transition_wavelength; }

IonSpecies IonSpecies::mg25() {
  // Atomic mass of 25Mg minus one electron.
  return IonSpecies{"25Mg+", 24.98583696 * c::atomic_mass_unit - c::electron_mass, 280e-9, 41.4e6};
}

TrapLaserConfig TrapLaserConfig::doppler_default(const IonSpecies& species, double motional_frequency) {
  TrapLaserConfig cfg;
  cfg.motional_frequency = motional_frequency;
  cfg.detuning = -0.5 * species.gamma();
  return cfg;
}

double lamb_dicke(const IonSpecies& species, const TrapLaserConfig& cfg) {
  if (!(cfg.motional_frequency > 0)) {
    throw Error(ErrorKind::config, "core-config", "lamb_dicke requires motional_frequency > 0");
  }
  if (!(species.mass > 0)) {
    throw Error(ErrorKind::config, "core-config", "lamb_dicke requires mass > 0");
  }
  const double k_eff = std::sqrt(2.0) * species.wavenumber() * std::abs(cfg.beam_axis_cosine);
  return k_eff * std::sqrt(c::hbar / (2.0 * species.mass * cfg.motional_frequency));
}

namespace {

void check(std::vector<ConfigViolation>& out, bool ok, std::string field, std::string message) {
  if (!ok) out.push_back({std::move(field), std::move(message)});
}

}  // namespace

std::vector<ConfigViolation> validate_species(const IonSpecies& species) {
  std::vector<ConfigViolation> out;
  check(out, species.mass > 0, "mass", "must be > 0 kg");
  check(out, species.transition_wavelength > 0, "transition_wavelength", "must be > 0 m");
  check(out, species.natural_linewidth > 0, "natural_linewidth", "must be > 0 Hz");
  return out;
}

std::vector<ConfigViolation> validate_config(const TrapLaserConfig& cfg, const IonSpecies& species) {
  auto out = validate_species(species);
  check(out, cfg.motional_frequency > 0, "motional_frequency", "must be > 0 rad/s");
  check(out, cfg.ion_electrode_distance > 0, "ion_electrode_distance", "must be > 0 m");
  check(out, std::isfinite(cfg.detuning), "detuning", "must be finite");
  check(out, cfg.saturation >= 0, "saturation", "must be >= 0");
  check(out, cfg.beam_axis_cosine >= -1 && cfg.beam_axis_cosine <= 1, "beam_axis_cosine",
        "must lie in [-1, 1]");
  check(out, cfg.detection_efficiency > 0 && cfg.detection_efficiency <= 1, "detection_efficiency",
        "must lie in (0, 1]");
  check(out, cfg.background_rate >= 0, "background_rate", "must be >= 0 counts/s");
  check(out, cfg.weak_binding_fraction > 0 && cfg.weak_binding_fraction < 1, "weak_binding_fraction",
        "must lie in (0, 1)");
  check(out, cfg.recoil_geometry_factor >= 0, "recoil_geometry_factor", "must be >= 0");
  check(out, cfg.quadrature_rtol > 0 && cfg.quadrature_rtol < 1e-2, "quadrature_rtol",
        "must lie in (0, 1e-2)");
  check(out, cfg.ode_rtol > 0 && cfg.ode_rtol < 1e-2, "ode_rtol", "must lie in (0, 1e-2)");
  if (cfg.motional_frequency > 0 && species.natural_linewidth > 0) {
    const double bound = cfg.weak_binding_fraction * species.gamma();
    if (!(cfg.motional_frequency < bound)) {
      std::ostringstream msg;
      msg << "weak-binding bound violated: omega/2pi = " << cfg.motional_frequency / c::two_pi / 1e6
          << " MHz must be < " << cfg.weak_binding_fraction << " * " << species.natural_linewidth / 1e6
          << " MHz";
      out.push_back({"motional_frequency", msg.str()});
    }
  }
  return out;
}

std::vector<ConfigViolation> validate_schedule(const DelaySchedule& schedule) {
  std::vector<ConfigViolation> out;
  check(out, !schedule.delays.empty(), "delays", "must not be empty");
  for (std::size_t i = 0; i < schedule.delays.size(); ++i) {
    if (schedule.delays[i] < 0) {
      out.push_back({"delays", "delay " + std::to_string(i) + " is negative"});
    }
    if (i > 0 && !(schedule.delays[i] > schedule.delays[i - 1])) {
      out.push_back({"delays", "delays must be strictly increasing at index " + std::to_string(i)});
    }
  }
  check(out, schedule.repeats_per_delay >= 1, "repeats_per_delay", "must be >= 1");
  return out;
}

void require_valid(const TrapLaserConfig& cfg, const IonSpecies& species) {
  const auto violations = validate_config(cfg, species);
  if (violations.empty()) return;
  std::ostringstream msg;
  msg << "invalid configuration:";
  for (const auto& v : violations) msg << " [" << v.field << ": " << v.message << "]";
  throw Error(ErrorKind::config, "core-config", msg.str());
}

namespace {

double required(const json& j, const char* key, const char* section) {
  if (!j.contains(key)) {
    throw Error(ErrorKind::config, "core-config",
                std::string("missing field ") + section + "." + key);
  }
  if (!j.at(key).is_number()) {
    throw Error(ErrorKind::config, "core-config",
                std::string("field ") + section + "." + key + " must be a number");
  }
  return j.at(key).get<double>();
}

double optional(const json& j, const char* key, double fallback, const char* section) {
  return j.contains(key) ? required(j, key, section) : fallback;
}

}  // namespace

IonSpecies species_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "mg25") return IonSpecies::mg25();
    throw Error(ErrorKind::config, "core-config", "unknown species preset '" + j.get<std::string>() + "'");
  }
  if (!j.is_object()) throw Error(ErrorKind::config, "core-config", "species must be a preset name or object");
  if (j.contains("preset")) {
    auto species = species_from_json(j.at("preset"));
    if (j.contains("name")) species.name = j.at("name").get<std::string>();
    return species;
  }
  IonSpecies s;
  s.name = j.value("name", std::string("custom"));
  s.mass = required(j, "mass_amu", "species") * c::atomic_mass_unit;
  s.transition_wavelength = required(j, "transition_wavelength_nm", "species") * 1e-9;
  s.natural_linewidth = required(j, "natural_linewidth_mhz", "species") * 1e6;
  return s;
}

json species_to_json(const IonSpecies& s) {
  return json{{"name", s.name},
              {"mass_amu", s.mass / c::atomic_mass_unit},
              {"transition_wavelength_nm", s.transition_wavelength / 1e-9},
              {"natural_linewidth_mhz", s.natural_linewidth / 1e6}};
}

TrapLaserConfig trap_from_json(const json& j, const IonSpecies& species) {
  if (!j.is_object()) throw Error(ErrorKind::config, "core-config", "trap section must be an object");
  TrapLaserConfig cfg;
  const char* sec = "trap";
  cfg.motional_frequency = required(j, "motional_frequency_mhz", sec) * 1e6 * c::two_pi;
  cfg.ion_electrode_distance = optional(j, "ion_electrode_distance_um", 40.0, sec) * 1e-6;
  if (j.contains("detuning_mhz") && j.contains("detuning_linewidths")) {
    throw Error(ErrorKind::config, "core-config",
                "give either trap.detuning_mhz or trap.detuning_linewidths, not both");
  }
  if (j.contains("detuning_mhz")) {
    cfg.detuning = required(j, "detuning_mhz", sec) * 1e6 * c::two_pi;
  } else {
    cfg.detuning = optional(j, "detuning_linewidths", -0.5, sec) * species.gamma();
  }
  cfg.saturation = optional(j, "saturation", cfg.saturation, sec);
  cfg.beam_axis_cosine = optional(j, "beam_axis_cosine", cfg.beam_axis_cosine, sec);
  cfg.detection_efficiency = optional(j, "detection_efficiency", cfg.detection_efficiency, sec);
  cfg.background_rate = optional(j, "background_rate_cps", cfg.background_rate, sec);
  cfg.weak_binding_fraction = optional(j, "weak_binding_fraction", cfg.weak_binding_fraction, sec);
  cfg.recoil_geometry_factor = optional(j, "recoil_geometry_factor", cfg.recoil_geometry_factor, sec);
  cfg.quadrature_rtol = optional(j, "quadrature_rtol", cfg.quadrature_rtol, sec);
  cfg.ode_rtol = optional(j, "ode_rtol", cfg.ode_rtol, sec);
  return cfg;
}

json trap_to_json(const TrapLaserConfig& cfg) {
  return json{{"motional_frequency_mhz", cfg.motional_frequency / c::two_pi / 1e6},
              {"ion_electrode_distance_um", cfg.ion_electrode_distance / 1e-6},
              {"detuning_mhz", cfg.detuning / c::two_pi / 1e6},
              {"saturation", cfg.saturation},
              {"beam_axis_cosine", cfg.beam_axis_cosine},
              {"detection_efficiency", cfg.detection_efficiency},
              {"background_rate_cps", cfg.background_rate},
              {"weak_binding_fraction", cfg.weak_binding_fraction},
              {"recoil_geometry_factor", cfg.recoil_geometry_factor},
              {"quadrature_rtol", cfg.quadrature_rtol},
              {"ode_rtol", cfg.ode_rtol}};
}

RamanSettings raman_from_json(const json& j) {
  RamanSettings r;
  if (j.is_null()) return r;
  if (!j.is_object()) throw Error(ErrorKind::config, "core-config", "raman section must be an object");
  const char* sec = "raman";
  r.red_pi_time = optional(j, "red_pi_time_us", r.red_pi_time * 1e6, sec) * 1e-6;
  r.decay_periods = optional(j, "decay_periods", r.decay_periods, sec);
  r.detect_duration = optional(j, "detect_duration_us", r.detect_duration * 1e6, sec) * 1e-6;
  r.doppler_duration = optional(j, "doppler_duration_us", r.doppler_duration * 1e6, sec) * 1e-6;
  r.repump_duration = optional(j, "repump_duration_us", r.repump_duration * 1e6, sec) * 1e-6;
  r.cooling_cycles = static_cast<int>(optional(j, "cooling_cycles", r.cooling_cycles, sec));
  r.shots = static_cast<std::size_t>(optional(j, "shots", static_cast<double>(r.shots), sec));
  if (!(r.red_pi_time > 0) || r.decay_periods < 0 || r.detect_duration < 0 || r.cooling_cycles < 0 ||
      r.shots < 1) {
    throw Error(ErrorKind::config, "core-config",
                "raman: need red_pi_time_us > 0, decay_periods >= 0, detect_duration_us >= 0, "
                "cooling_cycles >= 0, shots >= 1");
  }
  return r;
}

json raman_to_json(const RamanSettings& r) {
  return json{{"red_pi_time_us", r.red_pi_time * 1e6},
              {"decay_periods", r.decay_periods},
              {"detect_duration_us", r.detect_duration * 1e6},
              {"doppler_duration_us", r.doppler_duration * 1e6},
              {"repump_duration_us", r.repump_duration * 1e6},
              {"cooling_cycles", r.cooling_cycles},
              {"shots", r.shots}};
}

}  // namespace iontrap
