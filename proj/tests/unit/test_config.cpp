#include <doctest.h>

#include <cmath>
#include <set>

#include "iontrap/config.hpp"
#include "iontrap/constants.hpp"
#include "iontrap/error.hpp"
#include "iontrap/random.hpp"

using namespace iontrap;
namespace c = iontrap::constants;
using nlohmann::json;

namespace {
TrapLaserConfig trap_at(double f_hz) {
  return TrapLaserConfig::doppler_default(IonSpecies::mg25(), c::two_pi * f_hz);
}
}  // namespace

TEST_CASE("mg25 preset") {
  const auto s = IonSpecies::mg25();
  CHECK(s.mass == doctest::Approx(4.1489047445408032e-26).epsilon(1e-14));
  CHECK(s.transition_wavelength == 280e-9);
  CHECK(s.gamma() == doctest::Approx(c::two_pi * 41.4e6));
  CHECK(validate_species(s).empty());
}

TEST_CASE("Lamb-Dicke parameter against high-precision values") {
  const auto s = IonSpecies::mg25();
  CHECK(lamb_dicke(s, trap_at(5.25e6)) == doctest::Approx(0.19698066514084721).epsilon(1e-13));
  CHECK(lamb_dicke(s, trap_at(4.02e6)) == doctest::Approx(0.22510763473401711).epsilon(1e-13));
  CHECK(lamb_dicke(s, trap_at(2.86e6)) == doctest::Approx(0.26688258451677133).epsilon(1e-13));

  auto tilted = trap_at(5.25e6);
  tilted.beam_axis_cosine = 0.5;
  CHECK(lamb_dicke(s, tilted) == doctest::Approx(0.5 * 0.19698066514084721).epsilon(1e-13));

  auto bad = trap_at(5.25e6);
  bad.motional_frequency = 0;
  CHECK_THROWS_AS(lamb_dicke(s, bad), Error);
}

TEST_CASE("validation reports every violated invariant") {
  const auto s = IonSpecies::mg25();
  CHECK(validate_config(trap_at(4.02e6), s).empty());

  auto cfg = trap_at(11e6);  // above 0.25 * 41.4 MHz
  auto v = validate_config(cfg, s);
  REQUIRE(v.size() == 1);
  CHECK(v[0].field == "motional_frequency");

  cfg = trap_at(4.02e6);
  cfg.detection_efficiency = 0;
  cfg.saturation = -1;
  cfg.beam_axis_cosine = 2;
  CHECK(validate_config(cfg, s).size() == 3);

  try {
    require_valid(cfg, s);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
    CHECK(std::string(e.what()).find("detection_efficiency") != std::string::npos);
  }
}

TEST_CASE("schedule validation") {
  CHECK(validate_schedule({{1e-3, 2e-3}, 10}).empty());
  CHECK_FALSE(validate_schedule({{}, 10}).empty());
  CHECK_FALSE(validate_schedule({{2e-3, 1e-3}, 10}).empty());
  CHECK_FALSE(validate_schedule({{-1e-3}, 10}).empty());
  CHECK_FALSE(validate_schedule({{1e-3}, 0}).empty());
}

TEST_CASE("species JSON forms") {
  CHECK(species_from_json(json("mg25")).mass == IonSpecies::mg25().mass);
  CHECK(species_from_json(json{{"preset", "mg25"}}).mass == IonSpecies::mg25().mass);
  const auto custom = species_from_json(
      json{{"mass_amu", 40.0}, {"transition_wavelength_nm", 397.0}, {"natural_linewidth_mhz", 21.6}});
  CHECK(custom.mass == doctest::Approx(40.0 * c::atomic_mass_unit));
  CHECK(custom.transition_wavelength == doctest::Approx(397e-9));
  CHECK(custom.natural_linewidth == doctest::Approx(21.6e6));
  CHECK_THROWS_AS(species_from_json(json("unobtainium")), Error);
  const auto round = species_from_json(species_to_json(custom));
  CHECK(round.mass == doctest::Approx(custom.mass));
}

TEST_CASE("trap JSON round trip and missing fields") {
  const auto s = IonSpecies::mg25();
  const auto cfg = trap_from_json(json{{"motional_frequency_mhz", 4.02}, {"detuning_linewidths", -0.3}}, s);
  CHECK(cfg.motional_frequency == doctest::Approx(c::two_pi * 4.02e6));
  CHECK(cfg.detuning == doctest::Approx(-0.3 * s.gamma()));
  const auto back = trap_from_json(trap_to_json(cfg), s);
  CHECK(back.motional_frequency == doctest::Approx(cfg.motional_frequency));
  CHECK(back.detuning == doctest::Approx(cfg.detuning));
  CHECK(back.saturation == doctest::Approx(cfg.saturation));
  CHECK(back.detection_efficiency == doctest::Approx(cfg.detection_efficiency));

  try {
    trap_from_json(json{{"detuning_linewidths", -0.5}}, s);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
    CHECK(std::string(e.what()).find("motional_frequency_mhz") != std::string::npos);
  }
}

TEST_CASE("raman settings default from null") {
  const auto r = raman_from_json(json());
  CHECK(r.shots == RamanSettings{}.shots);
  const auto r2 = raman_from_json(json{{"red_pi_time_us", 8.0}, {"shots", 10}});
  CHECK(r2.red_pi_time == doctest::Approx(8e-6));
  CHECK(r2.shots == 10);
  CHECK(raman_from_json(raman_to_json(r2)).red_pi_time == doctest::Approx(8e-6));
}

TEST_CASE("exit codes") {
  CHECK(exit_code(ErrorKind::config) == 2);
  CHECK(exit_code(ErrorKind::io) == 2);
  CHECK(exit_code(ErrorKind::data_quality) == 3);
  CHECK(exit_code(ErrorKind::degenerate_design) == 3);
  CHECK(exit_code(ErrorKind::infinite_temperature) == 3);
  CHECK(exit_code(ErrorKind::fit_convergence) == 4);
  CHECK(kExitAcceptanceFailure == 5);
  const Error e(ErrorKind::io, "survey", "boom");
  CHECK(e.module() == "survey");
  CHECK(std::string(e.what()) == "survey: boom");
}

TEST_CASE("stream seeds are deterministic and distinct") {
  static_assert(stream_seed(1, 0) == stream_seed(1, 0));
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 20; ++s)
    for (std::uint64_t k = 0; k < 50; ++k) seen.insert(stream_seed(s, k));
  CHECK(seen.size() == 1000);
  auto a = make_rng(7, 3), b = make_rng(7, 3);
  CHECK(a() == b());
}
