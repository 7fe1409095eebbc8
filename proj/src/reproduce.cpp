#include "iontrap/reproduce.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "iontrap/config.hpp"
#include "iontrap/constants.hpp"
#include "iontrap/error.hpp"
#include "iontrap/io.hpp"
#include "iontrap/random.hpp"
#include "iontrap/rates.hpp"
#include "iontrap/recool.hpp"
#include "iontrap/sideband.hpp"
#include "iontrap/simlab.hpp"
#include "iontrap/stats.hpp"
#include "iontrap/survey.hpp"

namespace iontrap {

namespace c = constants;

RetryOutcome majority_retry(const std::function<StageOutcome(int)>& attempt, int max_attempts) {
  if (max_attempts < 1) max_attempts = 1;
  const int need = max_attempts / 2 + 1;
  RetryOutcome out;
  int fails = 0;
  while (out.passes < need && fails < need && out.attempts < max_attempts) {
    out.history.push_back(attempt(out.attempts));
    ++out.attempts;
    if (out.history.back().passed) {
      ++out.passes;
    } else {
      ++fails;
    }
  }
  out.passed = out.passes >= need;
  return out;
}

bool ReproduceReport::all_passed() const {
  for (const auto& r : rows) {
    if (!r.passed) return false;
  }
  return true;
}

std::string ReproduceReport::table() const {
  std::ostringstream out;
  for (const auto& r : rows) {
    char head[160];
    std::snprintf(head, sizeof head, "%s %3d  %-44s", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str());
    out << head;
    if (r.statistical) out << " [" << r.passes << "/" << r.attempts << "]";
    out << " | " << r.detail << '\n';
  }
  return out.str();
}

nlohmann::json ReproduceReport::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : rows) {
    rs.push_back({{"id", r.id},           {"name", r.name},         {"passed", r.passed},
                  {"statistical", r.statistical}, {"attempts", r.attempts}, {"passes", r.passes},
                  {"detail", r.detail},   {"seconds", r.seconds}});
  }
  return {{"seed", seed}, {"fast", fast}, {"all_passed", all_passed()}, {"rows", rs}};
}

namespace {

// Hand evaluation of 4 m hbar omega rate / e^2 at 300 /s, 2pi 5.25 MHz, 25Mg+.
constexpr double kNoiseReference = 6.746977394149081e-12;

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

TrapLaserConfig trap_at(double f_mhz) {
  return TrapLaserConfig::doppler_default(IonSpecies::mg25(), c::two_pi * f_mhz * 1e6);
}

struct Recovery {
  double tolerance_sigma, tolerance_fraction;
};

Recovery recovery(const ReproduceOptions& o) { return o.fast ? Recovery{3.0, 0.3} : Recovery{2.0, 0.2}; }

StageOutcome judge_rate(double injected, const RateResult& r, const Recovery& tol) {
  const double diff = r.rate - injected;
  const double pulls = diff / r.rate_stderr;
  StageOutcome out;
  out.passed = std::abs(pulls) <= tol.tolerance_sigma && std::abs(diff) <= tol.tolerance_fraction * injected;
  out.detail = fmt("A_fit = %.1f +- %.1f /s vs %.0f (%+.2f sigma, %+.1f%%), chi2r %.2f", r.rate, r.rate_stderr,
                   injected, pulls, 100 * diff / injected, r.reduced_chi2);
  return out;
}

// ---------------------------------------------------------------------------
// Deterministic rows

StageOutcome row_ratio_algebra() {
  const double a = nbar_from_ratio(0.5);
  const double b = nbar_from_ratio(0.2537);
  return {a == 1.0 && std::abs(b - 0.340) <= 1e-3, fmt("R=0.5 -> %.15g, R=0.2537 -> %.6f", a, b)};
}

StageOutcome row_noise_formula() {
  const auto p = electric_field_noise(300.0, 0.0, IonSpecies::mg25(), c::two_pi * 5.25e6);
  const double rel = std::abs(p.S_E / kNoiseReference - 1.0);
  return {rel <= 1e-6, fmt("S_E = %.9e V^2/m^2/Hz, rel. diff %.1e", p.S_E, rel)};
}

StageOutcome row_power_law() {
  const auto species = IonSpecies::mg25();
  const struct {
    double f_mhz, rate, sigma;
  } triple[] = {{2.86, 1470, 150}, {4.02, 690, 60}, {5.25, 300, 30}};
  std::vector<PowerLawPoint> rates, noise;
  for (const auto& t : triple) {
    const double w = c::two_pi * t.f_mhz * 1e6;
    rates.push_back({w, t.rate, t.sigma});
    const auto n = electric_field_noise(t.rate, t.sigma, species, w);
    noise.push_back({w, n.S_E, n.S_E_stderr});
  }
  const auto fr = power_law_fit(rates);
  const auto fn = power_law_fit(noise);
  const bool ok = fr.exponent >= -2.8 && fr.exponent <= -2.0 && fn.exponent >= -1.8 && fn.exponent <= -1.0;
  return {ok, fmt("rate exponent %.3f +- %.3f, S_E exponent %.3f +- %.3f", fr.exponent, fr.exponent_stderr,
                  fn.exponent, fn.exponent_stderr)};
}

StageOutcome row_cross_technique() {
  RateResult r402{620, 50}, m402{690, 60}, r286{1260, 130}, m286{1470, 150};
  const auto a = compare_methods(r402, m402);
  const auto b = compare_methods(r286, m286);
  return {a.consistent && b.consistent, fmt("z(4.02 MHz) = %.3f, z(2.86 MHz) = %.3f", a.z, b.z)};
}

StageOutcome row_recool_properties() {
  const auto species = IonSpecies::mg25();
  const double gamma = species.gamma();
  std::string detail;
  bool ok = true;

  // Monotone recovery from a hot start at red detunings where the averaged rate falls with energy.
  for (double frac : {-0.1, -0.2, -0.3, -0.38}) {
    auto cfg = trap_at(4.02);
    cfg.detuning = frac * gamma;
    const double E0 = 15500 * c::hbar * cfg.motional_frequency;
    std::vector<double> t;
    for (int i = 0; i <= 1000; ++i) t.push_back(i * 2e-6);
    const auto curve = recool_curve(E0, species, cfg, t);
    double worst = 0;
    for (std::size_t i = 1; i < curve.size(); ++i) worst = std::max(worst, (curve[i - 1] - curve[i]) / curve[i - 1]);
    if (worst > 1e-9) ok = false;
    detail += fmt("monotone(%.2fG) max drop %.1e; ", frac, std::max(worst, 0.0));
  }

  // Zero energy: closed-form Lorentzian.
  const auto cfg = trap_at(4.02);
  const double s = cfg.saturation;
  const double x = 2 * cfg.detuning / gamma;
  const double closed = 0.5 * gamma * s / (1 + s + x * x);
  const double rel0 = std::abs(scattering_rate_at_energy(0.0, species, cfg) / closed - 1);
  if (rel0 > 1e-10) ok = false;
  detail += fmt("E=0 rel %.1e; ", rel0);

  // Quadrature vs brute-force phase average on 1e6 uniform phases.
  double worst_avg = 0;
  for (double quanta : {5.0, 1000.0, 15500.0}) {
    const double E = quanta * c::hbar * cfg.motional_frequency;
    const double v0 = std::sqrt(2 * E / species.mass);
    const std::size_t n = 1'000'000;
    double acc = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double phi = c::two_pi * (static_cast<double>(j) + 0.5) / static_cast<double>(n);
      acc += lorentzian_rate(cfg.detuning - species.wavenumber() * v0 * std::sin(phi), species, cfg);
    }
    const double brute = acc / static_cast<double>(n);
    worst_avg = std::max(worst_avg, std::abs(scattering_rate_at_energy(E, species, cfg) / brute - 1));
  }
  if (worst_avg > 1e-4) ok = false;
  detail += fmt("phase average rel %.1e", worst_avg);
  return {ok, detail};
}

StageOutcome row_sideband_asymmetry() {
  const auto species = IonSpecies::mg25();
  const auto cfg = trap_at(5.25);
  const auto drive = make_drive(species, cfg, RamanSettings{});
  const double t = drive.red_pi_time();
  bool ok = true;
  std::string detail;
  for (double nbar : {0.1, 0.34, 1.0, 3.0}) {
    const double red = flip_probability({nbar}, Sideband::red, t, drive);
    const double blue = flip_probability({nbar}, Sideband::blue, t, drive);
    if (!(red < blue)) ok = false;
    detail += fmt("nbar %.2f: %.4f < %.4f; ", nbar, red, blue);
  }
  const double zero = flip_probability({0.0}, Sideband::red, t, drive);
  if (zero != 0.0) ok = false;
  detail += fmt("nbar 0 red = %g", zero);
  return {ok, detail};
}

StageOutcome row_determinism(const ReproduceOptions& o) {
  const auto species = IonSpecies::mg25();
  const auto cfg = trap_at(4.02);
  const HeatingProcess proc{620, o.seed};
  auto recool_csv = [&](unsigned workers) {
    RecoolSynthOptions so;
    so.bins = 200;
    so.workers = workers;
    const auto traces = synth_recool_dataset({{5, 25}, 20}, species, cfg, proc, so);
    std::ostringstream s;
    io::write_recool_traces(s, traces);
    return s.str();
  };
  auto scan_csv = [&](unsigned workers) {
    const RamanSettings raman;
    const auto drive = make_drive(species, cfg, raman);
    const auto grid = sideband_grid(4.02e6, 0.75 / drive.red_pi_time(), 7);
    LabOptions lo;
    lo.workers = workers;
    const auto scan = run_scan(raman, species, cfg, {690, o.seed}, 2e-3, grid, 200, 0, lo);
    std::ostringstream s;
    io::write_scan(s, scan);
    return s.str();
  };
  const unsigned wide = std::max(2u, o.workers);
  const auto r1 = recool_csv(1), r2 = recool_csv(1), r3 = recool_csv(wide);
  const auto s1 = scan_csv(1), s2 = scan_csv(1), s3 = scan_csv(wide);
  const bool ok = r1 == r2 && r1 == r3 && s1 == s2 && s1 == s3;
  return {ok, fmt("recool CSV %zu bytes, scan CSV %zu bytes, identical across runs and %u workers: %s", r1.size(),
                  s1.size(), wide, ok ? "yes" : "no")};
}

// ---------------------------------------------------------------------------
// Statistical rows

struct RamanLoop {
  double f_mhz, rate;
  std::vector<double> delays;
};

StageOutcome raman_closed_loop(const ReproduceOptions& o, const RamanLoop& loop, std::uint64_t seed) {
  const auto species = IonSpecies::mg25();
  const auto cfg = trap_at(loop.f_mhz);
  const RamanSettings raman;
  const auto drive = make_drive(species, cfg, raman);
  const double f = loop.f_mhz * 1e6;
  const auto grid = sideband_grid(f, std::min(0.75 / drive.red_pi_time(), 0.45 * f), o.fast ? 15 : 21);
  const std::size_t shots = o.fast ? 500 : raman.shots;
  LabOptions lo;
  lo.workers = o.workers;
  HeatingDataset ds;
  ds.trap_frequency = cfg.motional_frequency;
  ds.method = MeasurementMethod::raman;
  std::string nbars;
  for (std::size_t k = 0; k < loop.delays.size(); ++k) {
    const auto scan = run_scan(raman, species, cfg, {loop.rate, seed}, loop.delays[k], grid, shots, k, lo);
    const auto fit = fit_scan(scan, f);
    ds.points.push_back({loop.delays[k], fit.nbar, fit.nbar_stderr});
    nbars += fmt("%s%.2f", k ? "," : "", fit.nbar);
  }
  auto out = judge_rate(loop.rate, fit_rate(ds), recovery(o));
  out.detail += "; nbar = " + nbars;
  return out;
}

// Same estimator on thermal states heated from nbar0 (the heating walk keeps them thermal),
// isolating the pipeline from the non-thermal state left by sideband cooling.
StageOutcome raman_thermal_control(const ReproduceOptions& o, const RamanLoop& loop, double nbar0, std::uint64_t seed) {
  const auto species = IonSpecies::mg25();
  const auto cfg = trap_at(loop.f_mhz);
  const RamanSettings raman;
  const auto drive = make_drive(species, cfg, raman);
  const double f = loop.f_mhz * 1e6;
  const auto grid = sideband_grid(f, std::min(0.75 / drive.red_pi_time(), 0.45 * f), o.fast ? 15 : 21);
  const std::size_t shots = o.fast ? 500 : raman.shots;
  LabOptions lo;
  lo.workers = o.workers;
  HeatingDataset ds;
  ds.trap_frequency = cfg.motional_frequency;
  for (std::size_t k = 0; k < loop.delays.size(); ++k) {
    const double nbar = nbar0 + loop.rate * loop.delays[k];
    const auto scan = run_thermal_scan(raman, species, cfg, nbar, stream_seed(seed, k), grid, shots, lo);
    const auto fit = fit_scan(scan, f);
    ds.points.push_back({loop.delays[k], fit.nbar, fit.nbar_stderr});
  }
  return judge_rate(loop.rate, fit_rate(ds), recovery(o));
}

struct RecoolLoop {
  double f_mhz, rate;
  std::vector<double> delays;
};

StageOutcome recool_closed_loop(const ReproduceOptions& o, const RecoolLoop& loop, std::uint64_t seed) {
  const auto species = IonSpecies::mg25();
  const auto cfg = trap_at(loop.f_mhz);
  RecoolSynthOptions so;
  so.workers = o.workers;
  if (o.fast) so.bins = 300;
  const DelaySchedule schedule{loop.delays, o.fast ? 100u : 400u};
  const auto traces = synth_recool_dataset(schedule, species, cfg, {loop.rate, seed}, so);
  HeatingDataset ds;
  ds.trap_frequency = cfg.motional_frequency;
  ds.method = MeasurementMethod::recool;
  for (const auto& tr : traces) {
    const auto fit = fit_recool(tr, species, cfg);
    ds.points.push_back({tr.delay, fit.nbar0, fit.nbar0_stderr});
  }
  return judge_rate(loop.rate, fit_rate(ds), recovery(o));
}

StageOutcome heating_walk_oracle(const ReproduceOptions& o, std::uint64_t seed) {
  const double nbar0 = 0.34;
  const std::vector<double> times{1e-3, 2e-3, 3e-3, 4e-3, 5e-3};
  const std::size_t trajectories = o.fast ? 2000 : 10000;
  bool ok = true;
  std::string detail;
  for (double rate : {300.0, 620.0, 1470.0}) {
    std::vector<double> means, errors;
    std::vector<std::uint64_t> last;
    for (std::size_t k = 0; k < times.size(); ++k) {
      Rng rng(stream_seed(seed, static_cast<std::uint64_t>(rate) * 16 + k));
      std::vector<std::uint64_t> finals(trajectories);
      for (auto& n : finals) {
        const auto walk = simulate_heating_walk(sample_thermal(nbar0, rng), rate, times[k], rng);
        n = walk.n_values.back();
      }
      const auto st = mean_stderr(std::span<const std::uint64_t>(finals));
      means.push_back(st.mean);
      errors.push_back(st.standard_error);
      if (k + 1 == times.size()) last = std::move(finals);
    }
    const auto line = weighted_line_fit(times, means, errors);
    const double pull = (line.slope - rate) / line.slope_stderr;
    if (std::abs(pull) > 3) ok = false;

    // Thermality on an independent 1e4-sample ensemble at the last time.
    Rng rng(stream_seed(seed, static_cast<std::uint64_t>(rate) * 16 + 15));
    std::vector<std::uint64_t> ks_sample(10000);
    for (auto& n : ks_sample) n = simulate_heating_walk(sample_thermal(nbar0, rng), rate, times.back(), rng).n_values.back();
    const auto ks = ks_test_geometric(ks_sample, nbar0 + rate * times.back());
    if (!(ks.p_value > 0.01)) ok = false;
    detail += fmt("A=%.0f slope %.1f+-%.1f (%+.2f se), KS p=%.3f; ", rate, line.slope, line.slope_stderr, pull, ks.p_value);
  }
  return {ok, detail};
}

StageOutcome survey_synthetic(std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> log_d(std::log10(40e-6), std::log10(400e-6));
  std::uniform_real_distribution<double> scatter(-1.0, 1.0);
  const double prefactor = 1e-30;  // V^2 m^2 / Hz at d = 1 m for a d^-4 law
  std::vector<SurveyEntry> entries;
  std::vector<double> injected;
  for (int i = 0; i < 30; ++i) {
    const double d = std::pow(10.0, log_d(rng));
    const double s = scatter(rng);
    injected.push_back(s);
    entries.push_back({"synthetic", d, c::two_pi * 1e6, prefactor * std::pow(d, -4.0) * std::pow(10.0, s), "synthetic"});
  }
  const auto fit = distance_scaling_fit(entries);
  // Leave-one-out residual from the d^-4 band is n/(n-1) times the centred injected scatter.
  double mean = 0;
  for (double s : injected) mean += s;
  mean /= static_cast<double>(injected.size());
  const double factor = static_cast<double>(injected.size()) / static_cast<double>(injected.size() - 1);
  double worst = 0;
  for (std::size_t i = 0; i < injected.size(); ++i) {
    worst = std::max(worst, std::abs(fit.residuals[i].residual_decades - factor * (injected[i] - mean)));
  }
  const double pull = (fit.exponent + 4.0) / fit.exponent_stderr;
  return {std::abs(pull) <= 3 && worst < 1e-9,
          fmt("exponent %.3f +- %.3f (%+.2f se), residual mismatch %.1e decades", fit.exponent, fit.exponent_stderr,
              pull, worst)};
}

std::vector<double> steps(double first, double last, double step) {
  std::vector<double> v;
  for (double x = first; x <= last + 1e-12 * std::abs(last); x += step) v.push_back(x);
  return v;
}

}  // namespace

ReproduceReport run_reproduce(const ReproduceOptions& o) {
  ReproduceReport report;
  report.fast = o.fast;
  report.seed = o.seed;

  using Attempt = std::function<StageOutcome(std::uint64_t seed)>;
  auto wanted = [&](int id) { return o.only.empty() || std::find(o.only.begin(), o.only.end(), id) != o.only.end(); };
  auto run = [&](int id, const std::string& name, bool statistical, const Attempt& body) {
    if (!wanted(id)) return;
    AcceptanceRow row;
    row.id = id;
    row.name = name;
    row.statistical = statistical;
    const auto start = std::chrono::steady_clock::now();
    auto guarded = [&](int attempt) {
      try {
        return body(stream_seed(stream_seed(o.seed, static_cast<std::uint64_t>(id)), static_cast<std::uint64_t>(attempt)));
      } catch (const std::exception& e) {
        return StageOutcome{false, "stage '" + name + "' failed: " + e.what()};
      }
    };
    if (statistical) {
      const auto r = majority_retry(guarded);
      row.passed = r.passed;
      row.attempts = r.attempts;
      row.passes = r.passes;
      row.detail = r.history.back().detail;
    } else {
      const auto r = guarded(0);
      row.passed = r.passed;
      row.attempts = 1;
      row.passes = r.passed ? 1 : 0;
      row.detail = r.detail;
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.rows.push_back(std::move(row));
  };

  run(1, "ratio thermometry algebra", false, [](std::uint64_t) { return row_ratio_algebra(); });
  run(2, "S_E conversion at 300 /s, 5.25 MHz", false, [](std::uint64_t) { return row_noise_formula(); });
  run(3, "power-law pipeline on the rate triple", false, [](std::uint64_t) { return row_power_law(); });
  run(4, "cross-technique z-scores", false, [](std::uint64_t) { return row_cross_technique(); });
  run(5, "closed-loop Raman, A=690 /s at 4.02 MHz", true, [&](std::uint64_t s) {
    return raman_closed_loop(o, {4.02, 690, steps(0, 5e-3, 1e-3)}, s);
  });
  run(6, "closed-loop recool, A=620 /s at 4.02 MHz", true, [&](std::uint64_t s) {
    return recool_closed_loop(o, {4.02, 620, steps(5, 25, 5)}, s);
  });
  run(7, "heating-walk slope and thermality", true, [&](std::uint64_t s) { return heating_walk_oracle(o, s); });
  run(8, "recool model properties", false, [](std::uint64_t) { return row_recool_properties(); });
  run(9, "sideband asymmetry", false, [](std::uint64_t) { return row_sideband_asymmetry(); });
  run(10, "determinism of simulation CSVs", false, [&](std::uint64_t) { return row_determinism(o); });

  if (o.include_extras) {
    run(101, "closed-loop Raman, A=1470 /s at 2.86 MHz", true, [&](std::uint64_t s) {
      return raman_closed_loop(o, {2.86, 1470, steps(0, 2.5e-3, 0.5e-3)}, s);
    });
    run(102, "closed-loop recool, A=1260 /s at 2.86 MHz", true, [&](std::uint64_t s) {
      return recool_closed_loop(o, {2.86, 1260, steps(5, 25, 5)}, s);
    });
    run(104, "Raman estimator on heated thermal states", true, [&](std::uint64_t s) {
      return raman_thermal_control(o, {4.02, 690, steps(0, 5e-3, 1e-3)}, 0.0, s);
    });
    run(103, "synthetic survey, d^-4 recovery", true, [](std::uint64_t s) { return survey_synthetic(s); });
  }
  return report;
}

}  // namespace iontrap
