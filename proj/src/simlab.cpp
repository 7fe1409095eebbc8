#include "iontrap/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "iontrap/constants.hpp"
#include "iontrap/error.hpp"
#include "iontrap/parallel.hpp"

namespace iontrap {

namespace c = constants;

TrajectoryRecord simulate_heating_walk(std::uint64_t n0, double rate, double duration, Rng& rng,
                                       std::size_t max_jumps) {
  if (!(rate >= 0)) throw Error(ErrorKind::config, "sim-lab", "heating rate must be >= 0");
  if (!(duration >= 0)) throw Error(ErrorKind::config, "sim-lab", "duration must be >= 0");
  TrajectoryRecord rec;
  rec.times.push_back(0.0);
  rec.n_values.push_back(n0);
  std::uint64_t n = n0;
  double t = 0;
  if (rate > 0) {
    std::exponential_distribution<double> wait(1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t jumps = 0;
    while (true) {
      const double total = rate * (2.0 * static_cast<double>(n) + 1.0);
      t += wait(rng) / total;
      if (t > duration) break;
      const double up = (static_cast<double>(n) + 1.0) / (2.0 * static_cast<double>(n) + 1.0);
      n = unit(rng) < up ? n + 1 : n - 1;
      rec.times.push_back(t);
      rec.n_values.push_back(n);
      if (++jumps > max_jumps) {
        std::ostringstream msg;
        msg << "heating walk exceeded " << max_jumps << " jumps by t = " << t << " s";
        throw Error(ErrorKind::config, "sim-lab", msg.str());
      }
    }
  }
  rec.times.push_back(duration);
  rec.n_values.push_back(n);
  return rec;
}

TrajectoryRecord simulate_heating_walk(std::uint64_t n0, const HeatingProcess& proc, double duration) {
  Rng rng = make_rng(proc.seed, 0);
  return simulate_heating_walk(n0, proc.rate, duration, rng);
}

std::uint64_t propagate_occupation(std::uint64_t n0, double rate, double duration, Rng& rng) {
  if (!(rate >= 0)) throw Error(ErrorKind::config, "sim-lab", "heating rate must be >= 0");
  if (!(duration >= 0)) throw Error(ErrorKind::config, "sim-lab", "duration must be >= 0");
  const double a = rate * duration;
  if (a == 0) return n0;
  const double p = 1.0 / (1.0 + a);
  std::uint64_t n = 0;
  if (n0 > 0) {
    std::binomial_distribution<long long> survivors_dist(static_cast<long long>(n0), p);
    const long long survivors = survivors_dist(rng);
    if (survivors > 0) {
      std::negative_binomial_distribution<long long> family(survivors, p);
      n += static_cast<std::uint64_t>(survivors + family(rng));
    }
  }
  std::geometric_distribution<long long> immigrants(p);
  n += static_cast<std::uint64_t>(immigrants(rng));
  return n;
}

std::uint64_t sample_thermal(double nbar, Rng& rng) {
  if (!(nbar >= 0)) throw Error(ErrorKind::config, "sim-lab", "nbar must be >= 0");
  if (nbar == 0) return 0;
  std::geometric_distribution<long long> dist(1.0 / (nbar + 1.0));
  return static_cast<std::uint64_t>(dist(rng));
}

void PulseSequence::validate() const {
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& step = steps[i];
    const bool ok = std::visit(
        [](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, SidebandCool>) {
            return s.cycles >= 0;
          } else {
            return s.duration >= 0;
          }
        },
        step);
    if (!ok) {
      throw Error(ErrorKind::config, "sim-lab", "step " + std::to_string(i) + " has a negative duration or count");
    }
    if (std::holds_alternative<Detect>(step) && i + 1 != steps.size()) {
      throw Error(ErrorKind::config, "sim-lab", "detect must be the last step");
    }
  }
}

PulseSequence PulseSequence::heating_probe(const RamanSettings& raman, double delay, double probe_detuning_hz,
                                           double probe_duration) {
  PulseSequence seq;
  seq.steps = {DopplerCool{raman.doppler_duration},
               Repump{raman.repump_duration},
               SidebandCool{raman.cooling_cycles},
               Delay{delay},
               RamanProbe{probe_detuning_hz, probe_duration},
               Detect{raman.detect_duration}};
  return seq;
}

MeanStderr SequenceResult::count_stats() const { return mean_stderr(std::span<const std::uint64_t>(counts)); }

MeanStderr SequenceResult::occupation_stats() const {
  return mean_stderr(std::span<const std::uint64_t>(final_n));
}

double doppler_limit_nbar(const IonSpecies& species, const TrapLaserConfig& cfg) {
  return steady_state_energy(species, cfg) / (c::hbar * cfg.motional_frequency);
}

namespace {

// Flip probability for a single trial at occupation n: all three lines, each
// detuned from its own centre.
double probe_probability(std::uint64_t n, const RamanProbe& probe, double f_trap, const RabiDrive& drive) {
  double p = level_flip_probability(n, Sideband::red, probe.duration, drive, c::two_pi * (probe.detuning_hz + f_trap)) +
             level_flip_probability(n, Sideband::carrier, probe.duration, drive, c::two_pi * probe.detuning_hz) +
             level_flip_probability(n, Sideband::blue, probe.duration, drive, c::two_pi * (probe.detuning_hz - f_trap));
  return std::min(p, 1.0);
}

}  // namespace

SequenceResult run_sequence(const PulseSequence& seq, const IonSpecies& species, const TrapLaserConfig& cfg,
                            const RabiDrive& drive, const HeatingProcess& proc, std::size_t trials,
                            std::uint64_t stream, const LabOptions& options) {
  seq.validate();
  require_valid(cfg, species);
  if (trials < 1) throw Error(ErrorKind::config, "sim-lab", "trials must be >= 1");
  if (!(proc.rate >= 0)) throw Error(ErrorKind::config, "sim-lab", "heating rate must be >= 0");

  const bool needs_doppler = std::any_of(seq.steps.begin(), seq.steps.end(),
                                         [](const PulseStep& s) { return std::holds_alternative<DopplerCool>(s); });
  const double nbar_doppler =
      options.doppler_nbar ? *options.doppler_nbar : (needs_doppler ? doppler_limit_nbar(species, cfg) : 0.0);
  const double f_trap = cfg.motional_frequency / c::two_pi;
  const double bright_rate = scattering_rate_at_rest(species, cfg) * cfg.detection_efficiency;
  const double cooling_pulse = drive.red_pi_time();
  const std::uint64_t base = stream_seed(proc.seed, stream);

  SequenceResult result;
  result.counts.assign(trials, 0);
  result.final_n.assign(trials, 0);
  result.flipped.assign(trials, 0);

  parallel_for(trials, options.workers, [&](std::size_t trial) {
    Rng rng(stream_seed(base, trial));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uint64_t n = 0;
    bool flipped = false;
    std::uint64_t counts = 0;
    for (const auto& step : seq.steps) {
      std::visit(
          [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, DopplerCool>) {
              n = sample_thermal(nbar_doppler, rng);
              flipped = false;
            } else if constexpr (std::is_same_v<T, Repump>) {
              flipped = false;
            } else if constexpr (std::is_same_v<T, SidebandCool>) {
              for (int k = 0; k < s.cycles; ++k) {
                if (n > 0 && unit(rng) < level_flip_probability(n, Sideband::red, cooling_pulse, drive)) --n;
                flipped = false;
              }
            } else if constexpr (std::is_same_v<T, Delay>) {
              n = propagate_occupation(n, proc.rate, s.duration, rng);
            } else if constexpr (std::is_same_v<T, RamanProbe>) {
              flipped = unit(rng) < probe_probability(n, s, f_trap, drive);
            } else if constexpr (std::is_same_v<T, Detect>) {
              const double mean = ((flipped ? bright_rate : 0.0) + cfg.background_rate) * s.duration;
              if (mean > 0) {
                std::poisson_distribution<long long> pois(mean);
                counts = static_cast<std::uint64_t>(pois(rng));
              }
            }
          },
          step);
    }
    result.counts[trial] = counts;
    result.final_n[trial] = n;
    result.flipped[trial] = flipped ? 1 : 0;
  });
  return result;
}

namespace {

SidebandScan scan_from_sequences(const std::vector<PulseSequence>& sequences, double probe_duration,
                                 const IonSpecies& species, const TrapLaserConfig& cfg, const RabiDrive& drive,
                                 const HeatingProcess& proc, std::size_t shots, std::uint64_t stream,
                                 std::span<const double> grid_hz, const LabOptions& options) {
  SidebandScan scan;
  scan.probe_duration = probe_duration;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const auto res = run_sequence(sequences[i], species, cfg, drive, proc, shots, stream_seed(stream, i), options);
    const auto stats = res.count_stats();
    scan.detunings.push_back(grid_hz[i]);
    scan.signal.push_back(stats.mean);
    scan.standard_error.push_back(stats.standard_error);
  }
  scan.validate();
  return scan;
}

}  // namespace

SidebandScan run_scan(const RamanSettings& raman, const IonSpecies& species, const TrapLaserConfig& cfg,
                      const HeatingProcess& proc, double delay, std::span<const double> grid_hz,
                      std::size_t shots, std::uint64_t stream, const LabOptions& options) {
  const RabiDrive drive = make_drive(species, cfg, raman);
  const double probe = drive.red_pi_time();
  std::vector<PulseSequence> sequences;
  for (double d : grid_hz) sequences.push_back(PulseSequence::heating_probe(raman, delay, d, probe));
  return scan_from_sequences(sequences, probe, species, cfg, drive, proc, shots, stream, grid_hz, options);
}

SidebandScan run_thermal_scan(const RamanSettings& raman, const IonSpecies& species, const TrapLaserConfig& cfg,
                              double nbar, std::uint64_t seed, std::span<const double> grid_hz, std::size_t shots,
                              const LabOptions& options) {
  const RabiDrive drive = make_drive(species, cfg, raman);
  const double probe = drive.red_pi_time();
  std::vector<PulseSequence> sequences;
  for (double d : grid_hz) {
    PulseSequence seq;
    seq.steps = {DopplerCool{0.0}, RamanProbe{d, probe}, Detect{raman.detect_duration}};
    sequences.push_back(seq);
  }
  LabOptions opts = options;
  opts.doppler_nbar = nbar;
  return scan_from_sequences(sequences, probe, species, cfg, drive, HeatingProcess{0.0, seed}, shots, 0, grid_hz,
                             opts);
}

std::vector<RecoolTrace> synth_recool_dataset(const DelaySchedule& delays, const IonSpecies& species,
                                              const TrapLaserConfig& cfg, const HeatingProcess& proc,
                                              const RecoolSynthOptions& options) {
  if (const auto v = validate_schedule(delays); !v.empty()) {
    throw Error(ErrorKind::config, "sim-lab", "invalid delay schedule: " + v.front().field + ": " + v.front().message);
  }
  require_valid(cfg, species);
  if (!(proc.rate >= 0)) throw Error(ErrorKind::config, "sim-lab", "heating rate must be >= 0");
  if (!(options.bin_width > 0) || options.bins < 1) {
    throw Error(ErrorKind::config, "sim-lab", "recool traces need bin_width > 0 and >= 1 bin");
  }

  const double nbar_doppler = options.doppler_nbar ? *options.doppler_nbar : doppler_limit_nbar(species, cfg);
  const double hottest_mean = nbar_doppler + proc.rate * delays.delays.back();
  // A thermal draw beyond 60 means has probability exp(-60).
  const RecoolPropagator propagator(species, cfg, 60.0 * hottest_mean + 100.0);

  std::vector<double> edges(options.bins + 1);
  for (std::size_t i = 0; i <= options.bins; ++i) edges[i] = options.bin_width * static_cast<double>(i);

  std::vector<RecoolTrace> traces;
  for (std::size_t d = 0; d < delays.delays.size(); ++d) {
    const std::size_t repeats = delays.repeats_per_delay;
    std::vector<std::vector<double>> per_repeat(repeats);
    const std::uint64_t base = stream_seed(proc.seed, d);
    parallel_for(repeats, options.workers, [&](std::size_t r) {
      Rng rng(stream_seed(base, r));
      const std::uint64_t n_start = sample_thermal(nbar_doppler, rng);
      const double x0 = static_cast<double>(propagate_occupation(n_start, proc.rate, delays.delays[d], rng));
      auto& counts = per_repeat[r];
      counts.resize(options.bins);
      for (std::size_t i = 0; i < options.bins; ++i) {
        const double a = edges[i], b = edges[i + 1];
        const double mean_rate = (propagator.scattering_rate_after(x0, a) +
                                  4.0 * propagator.scattering_rate_after(x0, 0.5 * (a + b)) +
                                  propagator.scattering_rate_after(x0, b)) / 6.0;
        const double mean = (cfg.detection_efficiency * mean_rate + cfg.background_rate) * (b - a);
        std::poisson_distribution<long long> pois(mean);
        counts[i] = mean > 0 ? static_cast<double>(pois(rng)) : 0.0;
      }
    });
    RecoolTrace trace;
    trace.delay = delays.delays[d];
    trace.bin_edges = edges;
    trace.counts.assign(options.bins, 0.0);
    trace.repeats = repeats;
    for (const auto& counts : per_repeat) {
      for (std::size_t i = 0; i < options.bins; ++i) trace.counts[i] += counts[i];
    }
    traces.push_back(std::move(trace));
  }
  return traces;
}

}  // namespace iontrap
