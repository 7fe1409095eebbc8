#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "iontrap/constants.hpp"
#include "iontrap/error.hpp"
#include "iontrap/simlab.hpp"

using namespace iontrap;
namespace c = iontrap::constants;

namespace {

const IonSpecies kMg = IonSpecies::mg25();

TrapLaserConfig trap_at(double f_hz) { return TrapLaserConfig::doppler_default(kMg, c::two_pi * f_hz); }

// For n(0) = n0 and a = A t: mean n0 + a, variance 2 a n0 + a (1 + a).
struct Moments {
  double mean, variance;
};
Moments expected_moments(double n0, double a) { return {n0 + a, 2 * a * n0 + a * (1 + a)}; }

void check_moments(const std::vector<double>& v, Moments m) {
  const double n = static_cast<double>(v.size());
  double mean = 0;
  for (double x : v) mean += x;
  mean /= n;
  double var = 0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= n - 1;
  CHECK(std::abs(mean - m.mean) < 4 * std::sqrt(m.variance / n));
  CHECK(var == doctest::Approx(m.variance).epsilon(0.05));
}

}  // namespace

TEST_CASE("exact sampler matches birth-death moments") {
  Rng rng(11);
  for (auto [n0, a] : {std::pair{0.0, 0.5}, std::pair{5.0, 2.0}, std::pair{40.0, 0.3}}) {
    std::vector<double> v(100000);
    for (auto& x : v) x = static_cast<double>(propagate_occupation(static_cast<std::uint64_t>(n0), 1000.0, a / 1000.0, rng));
    CAPTURE(n0);
    CAPTURE(a);
    check_moments(v, expected_moments(n0, a));
  }
}

TEST_CASE("Gillespie walk matches birth-death moments") {
  Rng rng(12);
  std::vector<double> v(40000);
  for (auto& x : v) x = static_cast<double>(simulate_heating_walk(5, 2000.0, 1e-3, rng).n_values.back());
  check_moments(v, expected_moments(5, 2));
}

TEST_CASE("walk records are consistent") {
  Rng rng(13);
  const auto rec = simulate_heating_walk(3, 5000.0, 2e-3, rng);
  REQUIRE(rec.times.size() == rec.n_values.size());
  CHECK(rec.times.front() == 0.0);
  CHECK(rec.times.back() == doctest::Approx(2e-3));
  CHECK(rec.n_values.front() == 3);
  CHECK(std::is_sorted(rec.times.begin(), rec.times.end()));
  for (std::size_t i = 1; i + 1 < rec.n_values.size(); ++i) {
    const auto d = static_cast<long long>(rec.n_values[i]) - static_cast<long long>(rec.n_values[i - 1]);
    CHECK(std::abs(d) == 1);
  }
  CHECK_THROWS_AS(simulate_heating_walk(0, 1e9, 1.0, rng, 1000), Error);
}

TEST_CASE("thermal start stays thermal under heating") {
  Rng rng(14);
  const double a = 1.5;
  std::vector<std::uint64_t> exact(20000), walk(20000);
  for (auto& x : exact) x = propagate_occupation(sample_thermal(0.34, rng), 1000.0, a / 1000.0, rng);
  for (auto& x : walk) x = simulate_heating_walk(sample_thermal(0.34, rng), 1000.0, a / 1000.0, rng).n_values.back();
  CHECK(ks_test_geometric(exact, 0.34 + a).p_value > 1e-3);
  CHECK(ks_test_geometric(walk, 0.34 + a).p_value > 1e-3);
  CHECK(ks_test_geometric(exact, 0.34 + 1.3 * a).p_value < 1e-6);
}

TEST_CASE("pulse sequence validation") {
  PulseSequence ok = PulseSequence::heating_probe(RamanSettings{}, 1e-3, 0.0, 5e-6);
  CHECK_NOTHROW(ok.validate());
  PulseSequence bad;
  bad.steps = {Detect{1e-5}, Delay{1e-3}};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.steps = {Delay{-1.0}};
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("Doppler limit occupation") {
  CHECK(doppler_limit_nbar(kMg, trap_at(5.25e6)) == doctest::Approx(4.0201873297).epsilon(1e-7));
}

TEST_CASE("sideband cooling reaches the ground-state regime at 5.25 MHz") {
  const auto cfg = trap_at(5.25e6);
  const RamanSettings raman;
  PulseSequence seq;
  seq.steps = {DopplerCool{raman.doppler_duration}, Repump{raman.repump_duration}, SidebandCool{raman.cooling_cycles}};
  const auto r = run_sequence(seq, kMg, cfg, make_drive(kMg, cfg, raman), {0.0, 21}, 4000);
  CHECK(r.occupation_stats().mean <= 1.0);
}

TEST_CASE("results do not depend on the worker count") {
  const auto cfg = trap_at(4.02e6);
  const RamanSettings raman;
  const auto seq = PulseSequence::heating_probe(raman, 1e-3, 4.02e6, 5e-6);
  const auto drive = make_drive(kMg, cfg, raman);
  LabOptions one, three;
  three.workers = 3;
  const auto a = run_sequence(seq, kMg, cfg, drive, {690, 99}, 500, 4, one);
  const auto b = run_sequence(seq, kMg, cfg, drive, {690, 99}, 500, 4, three);
  CHECK(a.counts == b.counts);
  CHECK(a.final_n == b.final_n);
  CHECK(a.flipped == b.flipped);
  const auto d = run_sequence(seq, kMg, cfg, drive, {690, 100}, 500, 4, one);
  CHECK(a.counts != d.counts);
}

TEST_CASE("thermal scan closed loop") {
  const auto cfg = trap_at(5.25e6);
  const RamanSettings raman;
  const double tpi = make_drive(kMg, cfg, raman).red_pi_time();
  const auto grid = sideband_grid(5.25e6, std::min(0.75 / tpi, 0.45 * 5.25e6), 21);
  const auto scan = run_thermal_scan(raman, kMg, cfg, 0.34, 77, grid, 1400);
  const auto fit = fit_scan(scan, 5.25e6);
  CHECK(std::abs(fit.nbar - 0.34) < 3 * fit.nbar_stderr);
}

TEST_CASE("recool synthesis is reproducible and worker independent") {
  const auto cfg = trap_at(4.02e6);
  const DelaySchedule sched{{5.0, 10.0}, 20};
  RecoolSynthOptions o;
  o.bins = 100;
  const auto a = synth_recool_dataset(sched, kMg, cfg, {620, 5}, o);
  o.workers = 2;
  const auto b = synth_recool_dataset(sched, kMg, cfg, {620, 5}, o);
  REQUIRE(a.size() == 2);
  CHECK(a[0].counts == b[0].counts);
  CHECK(a[1].counts == b[1].counts);
  CHECK(a[1].delay == 10.0);
  CHECK(a[0].repeats == 20);
  CHECK(a[0].bin_edges.size() == 101);
  // Hotter ions scatter less at first.
  CHECK(a[1].counts[0] < a[1].counts.back());
}
