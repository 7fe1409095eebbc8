#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "iontrap/error.hpp"
#include "iontrap/io.hpp"
#include "iontrap/manifest.hpp"

using namespace iontrap;
namespace fs = std::filesystem;

namespace {
fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("iontrap_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RecoolTrace trace(double delay, std::size_t bins, double w) {
  RecoolTrace t;
  t.delay = delay;
  t.repeats = 7;
  for (std::size_t i = 0; i <= bins; ++i) t.bin_edges.push_back(static_cast<double>(i) * w);
  for (std::size_t i = 0; i < bins; ++i) t.counts.push_back(static_cast<double>(i * i % 13));
  return t;
}
}  // namespace

TEST_CASE("doubles survive text") {
  for (double v : {0.1, 1.0 / 3.0, 6.746977394149081e-12, -2.5e300}) {
    CHECK(std::strtod(io::format_double(v).c_str(), nullptr) == v);
  }
}

TEST_CASE("recool traces round trip") {
  const std::vector<RecoolTrace> in{trace(5, 12, 1e-5), trace(10, 30, 3e-6)};
  std::stringstream s;
  io::write_recool_traces(s, in);
  const auto out = io::read_recool_traces(s);
  REQUIRE(out.size() == 2);
  for (int k = 0; k < 2; ++k) {
    CHECK(out[k].delay == in[k].delay);
    CHECK(out[k].repeats == in[k].repeats);
    CHECK(out[k].counts == in[k].counts);
    REQUIRE(out[k].bin_edges.size() == in[k].bin_edges.size());
    for (std::size_t i = 0; i < in[k].bin_edges.size(); ++i) {
      CHECK(out[k].bin_edges[i] == doctest::Approx(in[k].bin_edges[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("malformed recool files are io errors") {
  auto kind_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      io::read_recool_traces(in);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::config;
  };
  CHECK(kind_of("delay,counts\n1,2\n") == ErrorKind::io);
  CHECK(kind_of("delay_s,bin_start_s,bin_width_s,counts,repeats\n5,0,1e-5,abc,10\n") == ErrorKind::io);
  CHECK(kind_of("delay_s,bin_start_s,bin_width_s,counts,repeats\n5,0,1e-5,3\n") == ErrorKind::io);
}

TEST_CASE("scan round trip") {
  SidebandScan scan;
  scan.detunings = {-4e6, 0, 4e6};
  scan.signal = {0.1, 0.9, 0.4};
  scan.standard_error = {0.01, 0.02, 0.015};
  scan.probe_duration = 5e-6;
  std::stringstream s;
  io::write_scan(s, scan);
  const auto back = io::read_scan(s, 5e-6);
  CHECK(back.detunings == scan.detunings);
  CHECK(back.signal == scan.signal);
  CHECK(back.standard_error == scan.standard_error);
  CHECK(back.probe_duration == 5e-6);
}

TEST_CASE("heating dataset JSON round trip") {
  HeatingDataset ds;
  ds.trap_frequency = 2.5e7;
  ds.method = MeasurementMethod::recool;
  ds.points = {{5, 3000, 100}, {10, 6200, 180}};
  const auto back = io::heating_dataset_from_json(io::to_json(ds));
  CHECK(back.method == ds.method);
  CHECK(back.trap_frequency == doctest::Approx(ds.trap_frequency).epsilon(1e-14));
  REQUIRE(back.points.size() == 2);
  CHECK(back.points[1].nbar == 6200);
  CHECK(back.points[1].sigma == 180);
  CHECK_THROWS_AS(io::heating_dataset_from_json(nlohmann::json{{"points", 3}}), Error);
}

TEST_CASE("files and plot output") {
  const auto dir = scratch_dir("io");
  io::write_plot_csv(dir / "p.csv", std::vector<io::PlotRow>{{1, 2, 0.5}});
  CHECK(io::read_text(dir / "p.csv") == "x,y,yerr\n1,2,0.5\n");
  io::write_json(dir / "a.json", {{"k", 1}});
  CHECK(io::read_json(dir / "a.json").at("k") == 1);
  CHECK_THROWS_AS(io::read_text(dir / "missing.txt"), Error);
  CHECK_THROWS_AS(io::write_text(dir / "no" / "such" / "dir.txt", "x"), Error);
  io::write_text(dir / "bad.json", "{ not json");
  CHECK_THROWS_AS(io::read_json(dir / "bad.json"), Error);
  fs::remove_all(dir);
}

TEST_CASE("FNV-1a reference vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("config hash ignores key order and tracks values") {
  const auto a = nlohmann::json::parse(R"({"trap": {"f": 4.02, "d": 40}, "seedless": true})");
  const auto b = nlohmann::json::parse(R"({"seedless": true, "trap": {"d": 40, "f": 4.02}})");
  const auto c = nlohmann::json::parse(R"({"seedless": true, "trap": {"d": 40, "f": 4.03}})");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a) != config_hash(c));
  CHECK(config_hash(a).size() == 16);
}

TEST_CASE("manifest written last lists itself") {
  const auto dir = scratch_dir("manifest");
  RunManifest m;
  m.command = "simulate recool";
  m.config_hash = "0123456789abcdef";
  m.seed = 42;
  m.outputs = {(dir / "x.csv").string()};
  m.write(dir);
  const auto j = io::read_json(dir / "manifest.json");
  CHECK(j.at("command") == "simulate recool");
  CHECK(j.at("seed") == 42);
  CHECK(j.at("config_hash") == "0123456789abcdef");
  CHECK(j.at("tool_version") == kToolVersion);
  CHECK(j.at("timestamp").get<std::string>().back() == 'Z');
  fs::remove_all(dir);
}
