#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "iontrap/config.hpp"
#include "iontrap/random.hpp"
#include "iontrap/recool.hpp"
#include "iontrap/sideband.hpp"
#include "iontrap/stats.hpp"

namespace iontrap {

/// Motional heating as a jump process with rates up A(n+1), down A n.
struct HeatingProcess {
  double rate = 0;  // A = d<n>/dt, quanta/s
  std::uint64_t seed = 0;
};

struct TrajectoryRecord {
  std::vector<double> times;               // s
  std::vector<std::uint64_t> n_values;     // occupation after each event
  std::vector<std::uint64_t> photon_counts;
};

/// Gillespie simulation recording every jump, plus the initial and final samples.
/// Throws Error(config) when more than `max_jumps` jumps would be needed; use
/// propagate_occupation for long, hot walks.
TrajectoryRecord simulate_heating_walk(std::uint64_t n0, double rate, double duration, Rng& rng,
                                       std::size_t max_jumps = 10'000'000);
TrajectoryRecord simulate_heating_walk(std::uint64_t n0, const HeatingProcess& proc, double duration);

/// Exact draw of n(t) given n(0) = n0 for the same process, without simulating jumps.
///
/// The up/down rates make this a critical linear birth-death process with
/// immigration. Each initial quantum independently survives with probability
/// 1/(1+At), survivors carry a geometric family of mean 1+At, and immigration adds a
/// geometric count of mean At.
std::uint64_t propagate_occupation(std::uint64_t n0, double rate, double duration, Rng& rng);

/// Thermal (geometric) occupation with mean nbar.
std::uint64_t sample_thermal(double nbar, Rng& rng);

// Pulse-sequence steps.
struct DopplerCool { double duration = 0; };
struct Repump { double duration = 0; };
struct SidebandCool { int cycles = 0; };
struct Delay { double duration = 0; };
struct RamanProbe {
  double detuning_hz = 0;  // Raman detuning from the carrier
  double duration = 0;
};
struct Detect { double duration = 0; };

using PulseStep = std::variant<DopplerCool, Repump, SidebandCool, Delay, RamanProbe, Detect>;

struct PulseSequence {
  std::vector<PulseStep> steps;

  /// Non-negative durations; at most one detect step, and only as the last step.
  void validate() const;

  /// Doppler cool and prepare, sideband cool, wait, probe, detect.
  static PulseSequence heating_probe(const RamanSettings& raman, double delay, double probe_detuning_hz,
                                     double probe_duration);
};

struct LabOptions {
  /// Mean occupation after Doppler cooling; defaults to the recool model's Doppler limit.
  std::optional<double> doppler_nbar;
  unsigned workers = 1;
};

struct SequenceResult {
  std::vector<std::uint64_t> counts;   // photons per trial in the detect window
  std::vector<std::uint64_t> final_n;  // occupation at the end of each trial
  std::vector<std::uint8_t> flipped;   // internal state after the probe

  MeanStderr count_stats() const;
  MeanStderr occupation_stats() const;
};

/// Executes `trials` independent runs. Trial i draws from stream (seed, stream, i),
/// so results do not depend on the worker count.
SequenceResult run_sequence(const PulseSequence& seq, const IonSpecies& species, const TrapLaserConfig& cfg,
                            const RabiDrive& drive, const HeatingProcess& proc, std::size_t trials,
                            std::uint64_t stream = 0, const LabOptions& options = {});

/// Sweeps the probe detuning over `grid_hz`; each point averages `shots` runs of
/// the heating_probe sequence.
SidebandScan run_scan(const RamanSettings& raman, const IonSpecies& species, const TrapLaserConfig& cfg,
                      const HeatingProcess& proc, double delay, std::span<const double> grid_hz,
                      std::size_t shots, std::uint64_t stream = 0, const LabOptions& options = {});

/// Same, starting every shot from a thermal state with mean `nbar` (no cooling or delay).
SidebandScan run_thermal_scan(const RamanSettings& raman, const IonSpecies& species, const TrapLaserConfig& cfg,
                              double nbar, std::uint64_t seed, std::span<const double> grid_hz, std::size_t shots,
                              const LabOptions& options = {});

struct RecoolSynthOptions {
  double bin_width = 10e-6;  // s
  std::size_t bins = 500;
  std::optional<double> doppler_nbar;
  unsigned workers = 1;
};

/// Doppler recooling traces: for every delay and repeat, heat from the Doppler
/// limit, recool deterministically and draw Poisson counts per bin.
std::vector<RecoolTrace> synth_recool_dataset(const DelaySchedule& delays, const IonSpecies& species,
                                              const TrapLaserConfig& cfg, const HeatingProcess& proc,
                                              const RecoolSynthOptions& options = {});

/// Doppler-limit mean occupation of the recool model.
double doppler_limit_nbar(const IonSpecies& species, const TrapLaserConfig& cfg);

}  // namespace iontrap
