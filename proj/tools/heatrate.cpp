// heatrate: simulate, fit and reproduce heating-rate measurements.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "iontrap/config.hpp"
#include "iontrap/constants.hpp"
#include "iontrap/error.hpp"
#include "iontrap/io.hpp"
#include "iontrap/manifest.hpp"
#include "iontrap/rates.hpp"
#include "iontrap/recool.hpp"
#include "iontrap/reproduce.hpp"
#include "iontrap/sideband.hpp"
#include "iontrap/simlab.hpp"
#include "iontrap/survey.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace iontrap;

namespace {

namespace c = constants;

// Everything a run needs besides the command line, in SI units.
struct RunConfig {
  IonSpecies species;
  TrapLaserConfig trap;
  RamanSettings raman;
  double heating_rate = 0;
  DelaySchedule schedule{{}, 100};
  double scan_delay = 0;
  std::optional<double> scan_thermal_nbar;  // thermal probe state instead of the full sequence
  std::size_t scan_points = 21;
  double scan_half_window = 0;              // Hz, 0 = fit default
  RecoolSynthOptions recool_synth;
  RecoolFitOptions recool_fit;
  MeasurementMethod dataset_method = MeasurementMethod::raman;
  unsigned workers = 1;

  // Physics-relevant content in normalised units; the config hash is taken over this.
  json physics_json() const {
    json sched = json::array();
    for (double d : schedule.delays) sched.push_back(d);
    return {{"species", species_to_json(species)},
            {"trap", trap_to_json(trap)},
            {"raman", raman_to_json(raman)},
            {"heating", {{"rate_per_s", heating_rate}}},
            {"schedule", {{"delays_s", sched}, {"repeats_per_delay", schedule.repeats_per_delay}}},
            {"scan",
             {{"delay_s", scan_delay},
              {"thermal_nbar", scan_thermal_nbar ? json(*scan_thermal_nbar) : json(nullptr)},
              {"points_per_window", scan_points},
              {"half_window_hz", scan_half_window}}},
            {"recool",
             {{"bin_width_s", recool_synth.bin_width},
              {"bins", recool_synth.bins},
              {"model", recool_fit.model == RecoolModel::thermal ? "thermal" : "single_energy"},
              {"fit_background", recool_fit.fit_background}}},
            {"dataset", {{"method", to_string(dataset_method)}}}};
  }
};

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::config, "cli", what); }

double number(const json& j, const char* key, double fallback, const char* section) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) config_error(std::string("field ") + section + "." + key + " must be a number");
  return j.at(key).get<double>();
}

RunConfig load_run_config(const fs::path& path) {
  json j;
  try {
    j = io::read_json(path);
  } catch (const Error& e) {
    throw Error(ErrorKind::config, "cli", std::string("config: ") + e.what());
  }
  if (!j.is_object()) config_error("config root must be an object");
  if (!j.contains("species")) config_error("missing field species");
  if (!j.contains("trap")) config_error("missing field trap");
  RunConfig rc;
  rc.species = species_from_json(j.at("species"));
  rc.trap = trap_from_json(j.at("trap"), rc.species);
  rc.raman = raman_from_json(j.value("raman", json()));
  require_valid(rc.trap, rc.species);

  const json heating = j.value("heating", json::object());
  rc.heating_rate = number(heating, "rate_per_s", 0.0, "heating");

  const json sched = j.value("schedule", json::object());
  if (sched.contains("delays_s") && sched.contains("delays_ms")) {
    config_error("give either schedule.delays_s or schedule.delays_ms, not both");
  }
  const double unit = sched.contains("delays_ms") ? 1e-3 : 1.0;
  for (const auto& d : sched.value(sched.contains("delays_ms") ? "delays_ms" : "delays_s", json::array())) {
    if (!d.is_number()) config_error("schedule delays must be numbers");
    rc.schedule.delays.push_back(d.get<double>() * unit);
  }
  rc.schedule.repeats_per_delay = static_cast<std::size_t>(number(sched, "repeats_per_delay", 100, "schedule"));

  const json scan = j.value("scan", json::object());
  rc.scan_delay = number(scan, "delay_ms", 0.0, "scan") * 1e-3;
  if (scan.contains("thermal_nbar")) rc.scan_thermal_nbar = number(scan, "thermal_nbar", 0.0, "scan");
  rc.scan_points = static_cast<std::size_t>(number(scan, "points_per_window", 21, "scan"));
  rc.scan_half_window = number(scan, "half_window_khz", 0.0, "scan") * 1e3;

  const json recool = j.value("recool", json::object());
  rc.recool_synth.bin_width = number(recool, "bin_width_us", 10.0, "recool") * 1e-6;
  rc.recool_synth.bins = static_cast<std::size_t>(number(recool, "bins", 500, "recool"));
  const std::string model = recool.value("model", std::string("thermal"));
  if (model == "thermal") {
    rc.recool_fit.model = RecoolModel::thermal;
  } else if (model == "single_energy") {
    rc.recool_fit.model = RecoolModel::single_energy;
  } else {
    config_error("recool.model must be 'thermal' or 'single_energy'");
  }
  rc.recool_fit.fit_background = recool.value("fit_background", false);
  rc.recool_fit.fixed_background = rc.trap.background_rate;

  const json dataset = j.value("dataset", json::object());
  try {
    rc.dataset_method = method_from_string(dataset.value("method", std::string("raman")));
  } catch (const Error& e) {
    throw Error(ErrorKind::config, "cli", e.what());
  }
  rc.workers = static_cast<unsigned>(number(j, "workers", 1, "root"));
  if (rc.workers < 1) config_error("workers must be >= 1");
  if (rc.scan_points < 2) config_error("scan.points_per_window must be >= 2");
  return rc;
}

// Collects outputs and writes the manifest after everything else.
class Run {
 public:
  Run(std::string command, fs::path out_dir, std::uint64_t seed) : out_(std::move(out_dir)) {
    manifest_.command = std::move(command);
    manifest_.seed = seed;
    std::error_code ec;
    fs::create_directories(out_, ec);
    if (ec || !fs::is_directory(out_)) {
      throw Error(ErrorKind::io, "cli", "cannot create output directory " + out_.string());
    }
  }

  void input(const fs::path& p) { manifest_.inputs.push_back(p.string()); }
  void config(const fs::path& p, const json& physics) {
    input(p);
    manifest_.config_hash = config_hash(physics);
  }
  fs::path output(const std::string& name) {
    manifest_.outputs.push_back((out_ / name).string());
    return out_ / name;
  }
  const std::string& hash() const { return manifest_.config_hash; }
  void finish() {
    manifest_.outputs.push_back((out_ / "manifest.json").string());
    manifest_.write(out_);
  }

 private:
  fs::path out_;
  RunManifest manifest_;
};

json sidecar(const RunConfig& rc, std::uint64_t seed) {
  return {{"seed", seed}, {"config", rc.physics_json()}, {"tool_version", kToolVersion}};
}

std::vector<double> scan_grid(const RunConfig& rc) {
  const double f = rc.trap.motional_frequency / c::two_pi;
  const auto drive = make_drive(rc.species, rc.trap, rc.raman);
  const double half =
      rc.scan_half_window > 0 ? rc.scan_half_window : std::min(0.75 / drive.red_pi_time(), 0.45 * f);
  return sideband_grid(f, half, rc.scan_points);
}

ScanFitOptions scan_fit_options(const RunConfig& rc) {
  ScanFitOptions o;
  o.half_window = rc.scan_half_window;
  return o;
}

SidebandScan simulate_scan(const RunConfig& rc, std::uint64_t seed, double delay, std::uint64_t stream) {
  LabOptions lo;
  lo.workers = rc.workers;
  const auto grid = scan_grid(rc);
  if (rc.scan_thermal_nbar) {
    return run_thermal_scan(rc.raman, rc.species, rc.trap, *rc.scan_thermal_nbar + rc.heating_rate * delay,
                            stream_seed(seed, stream), grid, rc.raman.shots, lo);
  }
  return run_scan(rc.raman, rc.species, rc.trap, {rc.heating_rate, seed}, delay, grid, rc.raman.shots, stream, lo);
}

void require_schedule(const RunConfig& rc) {
  if (const auto v = validate_schedule(rc.schedule); !v.empty()) {
    config_error("schedule: " + v.front().field + ": " + v.front().message);
  }
}

std::vector<io::PlotRow> dataset_rows(const HeatingDataset& ds) {
  std::vector<io::PlotRow> rows;
  for (const auto& p : ds.points) rows.push_back({p.delay, p.nbar, p.sigma});
  return rows;
}

// ---------------------------------------------------------------------------

struct Common {
  std::string config;
  std::uint64_t seed = 1;
  std::string out = ".";
  bool fast = false;
};

void cmd_simulate(const std::string& kind, const Common& a) {
  const auto rc = load_run_config(a.config);
  Run run("simulate " + kind, a.out, a.seed);
  run.config(a.config, rc.physics_json());

  if (kind == "recool") {
    require_schedule(rc);
    auto opts = rc.recool_synth;
    opts.workers = rc.workers;
    const auto traces = synth_recool_dataset(rc.schedule, rc.species, rc.trap, {rc.heating_rate, a.seed}, opts);
    io::write_recool_traces(run.output("recool_traces.csv"), traces);
    io::write_json(run.output("recool_traces.json"), sidecar(rc, a.seed));
  } else if (kind == "scan") {
    const auto scan = simulate_scan(rc, a.seed, rc.scan_delay, 0);
    io::write_scan(run.output("scan.csv"), scan);
    io::write_json(run.output("scan.json"), sidecar(rc, a.seed));
  } else {  // dataset
    require_schedule(rc);
    HeatingDataset ds;
    ds.trap_frequency = rc.trap.motional_frequency;
    ds.method = rc.dataset_method;
    if (rc.dataset_method == MeasurementMethod::raman) {
      const double f = rc.trap.motional_frequency / c::two_pi;
      for (std::size_t k = 0; k < rc.schedule.delays.size(); ++k) {
        const auto scan = simulate_scan(rc, a.seed, rc.schedule.delays[k], k);
        io::write_scan(run.output("scan_" + std::to_string(k) + ".csv"), scan);
        const auto fit = fit_scan(scan, f, scan_fit_options(rc));
        ds.points.push_back({rc.schedule.delays[k], fit.nbar, fit.nbar_stderr});
      }
    } else {
      auto opts = rc.recool_synth;
      opts.workers = rc.workers;
      const auto traces = synth_recool_dataset(rc.schedule, rc.species, rc.trap, {rc.heating_rate, a.seed}, opts);
      io::write_recool_traces(run.output("recool_traces.csv"), traces);
      for (const auto& tr : traces) {
        const auto fit = fit_recool(tr, rc.species, rc.trap, rc.recool_fit);
        ds.points.push_back({tr.delay, fit.nbar0, fit.nbar0_stderr});
      }
    }
    json out = io::to_json(ds);
    out["seed"] = a.seed;
    out["config_hash"] = run.hash();
    io::write_json(run.output("heating_dataset.json"), out);
    io::write_plot_csv(run.output("heating_dataset_plot.csv"), dataset_rows(ds));
  }
  run.finish();
}

void cmd_fit(const std::string& kind, const Common& a, const std::vector<std::string>& inputs,
             const std::string& quantity) {
  if (inputs.empty()) config_error("fit " + kind + " needs --input");
  Run run("fit " + kind, a.out, a.seed);
  for (const auto& in : inputs) run.input(in);

  if (kind == "recool" || kind == "scan") {
    if (a.config.empty()) config_error("fit " + kind + " needs --config");
    const auto rc = load_run_config(a.config);
    run.config(a.config, rc.physics_json());
    if (kind == "recool") {
      json results = json::array();
      HeatingDataset ds;
      ds.trap_frequency = rc.trap.motional_frequency;
      ds.method = MeasurementMethod::recool;
      for (const auto& in : inputs) {
        for (const auto& tr : io::read_recool_traces(fs::path(in))) {
          const auto fit = fit_recool(tr, rc.species, rc.trap, rc.recool_fit);
          json r = io::to_json(fit);
          r["delay_s"] = tr.delay;
          r["repeats"] = tr.repeats;
          r["config_hash"] = run.hash();
          results.push_back(r);
          ds.points.push_back({tr.delay, fit.nbar0, fit.nbar0_stderr});
        }
      }
      io::write_json(run.output("recool_fit.json"), results);
      io::write_json(run.output("heating_dataset.json"), io::to_json(ds));
      io::write_plot_csv(run.output("recool_plot.csv"), dataset_rows(ds));
    } else {
      const auto drive = make_drive(rc.species, rc.trap, rc.raman);
      const double f = rc.trap.motional_frequency / c::two_pi;
      json results = json::array();
      for (const auto& in : inputs) {
        const auto scan = io::read_scan(fs::path(in), drive.red_pi_time());
        json r = io::to_json(fit_scan(scan, f, scan_fit_options(rc)));
        r["input"] = in;
        r["config_hash"] = run.hash();
        results.push_back(r);
      }
      io::write_json(run.output("scan_fit.json"), results.size() == 1 ? results.front() : results);
    }
  } else if (kind == "rate") {
    IonSpecies species = IonSpecies::mg25();
    if (!a.config.empty()) {
      species = load_run_config(a.config).species;
      run.input(a.config);
    }
    json results = json::array();
    std::vector<io::PlotRow> rows;
    for (const auto& in : inputs) {
      const auto ds = io::heating_dataset_from_json(io::read_json(in));
      const auto r = fit_rate(ds);
      const auto noise = electric_field_noise(r.rate, r.rate_stderr, species, ds.trap_frequency);
      const auto free = fit_rate_free_intercept(ds);
      results.push_back({{"input", in},
                         {"method", to_string(ds.method)},
                         {"trap_frequency_mhz", ds.trap_frequency / c::two_pi / 1e6},
                         {"rate", io::to_json(r)},
                         {"noise", io::to_json(noise)},
                         {"free_intercept_diagnostic",
                          {{"rate_per_s", free.rate}, {"rate_stderr_per_s", free.rate_stderr},
                           {"intercept", free.intercept}, {"intercept_stderr", free.intercept_stderr}}}});
      for (const auto& row : dataset_rows(ds)) rows.push_back(row);
    }
    io::write_json(run.output("rate.json"), results.size() == 1 ? results.front() : results);
    io::write_plot_csv(run.output("rate_plot.csv"), rows);
  } else if (kind == "powerlaw") {
    IonSpecies species = IonSpecies::mg25();
    if (!a.config.empty()) {
      species = load_run_config(a.config).species;
      run.input(a.config);
    }
    std::vector<PowerLawPoint> rates;
    auto add = [&](double f_mhz, double rate, double sigma) { rates.push_back({c::two_pi * f_mhz * 1e6, rate, sigma}); };
    for (const auto& in : inputs) {
      if (fs::path(in).extension() == ".csv") {
        std::istringstream text(io::read_text(in));
        std::string line;
        bool header = true;
        while (std::getline(text, line)) {
          if (line.empty() || line[0] == '#') continue;
          if (header) {
            if (line.rfind("freq_mhz,rate_per_s,rate_stderr_per_s", 0) != 0) {
              throw Error(ErrorKind::io, "cli", in + ": expected header freq_mhz,rate_per_s,rate_stderr_per_s");
            }
            header = false;
            continue;
          }
          double f = 0, r = 0, s = 0;
          if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &f, &r, &s) != 3) {
            throw Error(ErrorKind::io, "cli", in + ": bad row '" + line + "'");
          }
          add(f, r, s);
        }
      } else {
        const json j = io::read_json(in);
        for (const auto& item : j.is_array() ? j : json::array({j})) {
          add(item.at("trap_frequency_mhz").get<double>(), item.at("rate").at("rate_per_s").get<double>(),
              item.at("rate").at("rate_stderr_per_s").get<double>());
        }
      }
    }
    std::vector<PowerLawPoint> noise;
    std::vector<io::PlotRow> rate_rows, noise_rows;
    for (const auto& p : rates) {
      const auto n = electric_field_noise(p.y, p.sigma, species, p.x);
      noise.push_back({p.x, n.S_E, n.S_E_stderr});
      rate_rows.push_back({p.x / c::two_pi / 1e6, p.y, p.sigma});
      noise_rows.push_back({p.x / c::two_pi / 1e6, n.S_E, n.S_E_stderr});
    }
    const auto fr = power_law_fit(rates);
    const auto fn = power_law_fit(noise);
    std::printf("heating-rate exponent %.3f +- %.3f, S_E exponent %.3f +- %.3f\n", fr.exponent, fr.exponent_stderr,
                fn.exponent, fn.exponent_stderr);
    io::write_json(run.output("powerlaw.json"), {{"x_unit", "rad/s"}, {"rate", io::to_json(fr)}, {"S_E", io::to_json(fn)}});
    io::write_plot_csv(run.output("powerlaw_rate_plot.csv"), rate_rows);
    io::write_plot_csv(run.output("powerlaw_se_plot.csv"), noise_rows);
  } else {  // survey
    SurveyQuantity q = SurveyQuantity::S_E;
    if (quantity == "omega_se") {
      q = SurveyQuantity::omega_S_E;
    } else if (quantity != "se") {
      config_error("--quantity must be 'se' or 'omega_se'");
    }
    SurveyData data;
    for (const auto& in : inputs) {
      auto part = ingest_survey(fs::path(in));
      for (auto& e : part.entries) data.entries.push_back(std::move(e));
      for (auto& i : part.issues) {
        i.message = in + ": " + i.message;
        data.issues.push_back(std::move(i));
      }
      for (auto& w : part.warnings) data.warnings.push_back(in + ": " + w);
    }
    for (const auto& w : data.warnings) std::fprintf(stderr, "heatrate: warning: %s\n", w.c_str());
    for (const auto& i : data.issues) std::fprintf(stderr, "heatrate: line %zu rejected: %s\n", i.line, i.message.c_str());
    std::vector<io::PlotRow> se_rows, wse_rows;
    json entries = json::array();
    for (const auto& e : data.entries) {
      se_rows.push_back({e.d * 1e6, e.S_E, 0});
      wse_rows.push_back({e.d * 1e6, e.omega * e.S_E, 0});
      entries.push_back({{"species", e.species}, {"d_um", e.d * 1e6}, {"omega_mhz", e.omega / c::two_pi / 1e6},
                         {"se_v2m2hz", e.S_E}, {"source", e.source}});
    }
    io::write_plot_csv(run.output("survey_se_plot.csv"), se_rows);
    io::write_plot_csv(run.output("survey_omega_se_plot.csv"), wse_rows);
    json issues = json::array();
    for (const auto& i : data.issues) issues.push_back({{"line", i.line}, {"message", i.message}});
    json out = {{"quantity", quantity}, {"entries", entries}, {"issues", issues}, {"warnings", data.warnings}};
    const auto fit = distance_scaling_fit(data.entries, q);
    out["fit"] = io::to_json(fit);
    io::write_json(run.output("survey_fit.json"), out);
  }
  run.finish();
}

int cmd_reproduce(const Common& a, unsigned workers) {
  ReproduceOptions o;
  o.seed = a.seed;
  o.fast = a.fast;
  o.workers = workers;
  Run run("reproduce", a.out, a.seed);
  const auto report = run_reproduce(o);
  std::fputs(report.table().c_str(), stdout);
  io::write_json(run.output("reproduce.json"), report.to_json());
  run.finish();
  if (!report.all_passed()) {
    for (const auto& r : report.rows) {
      if (!r.passed) std::fprintf(stderr, "heatrate: reproduce: stage %d (%s) failed\n", r.id, r.name.c_str());
    }
    return kExitAcceptanceFailure;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trapped-ion heating-rate toolkit: simulate, fit and reproduce."};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", common.config, "run configuration (JSON)");
    if (needs_config) opt->required();
    sub->add_option("--seed", common.seed, "random seed")->capture_default_str();
    sub->add_option("--out", common.out, "output directory")->capture_default_str();
  };

  auto* simulate = app.add_subcommand("simulate", "generate synthetic data");
  simulate->require_subcommand(1);
  std::string sim_kind;
  for (const char* kind : {"recool", "scan", "dataset"}) {
    auto* sub = simulate->add_subcommand(kind, std::string("simulate ") + kind);
    add_common(sub, true);
    sub->callback([&sim_kind, kind] { sim_kind = kind; });
  }

  auto* fit = app.add_subcommand("fit", "fit data files");
  fit->require_subcommand(1);
  std::string fit_kind;
  std::vector<std::string> inputs;
  std::string quantity = "se";
  for (const char* kind : {"recool", "scan", "rate", "powerlaw", "survey"}) {
    auto* sub = fit->add_subcommand(kind, std::string("fit ") + kind);
    add_common(sub, false);
    sub->add_option("--input", inputs, "input file(s)")->required();
    if (std::string(kind) == "survey") {
      sub->add_option("--quantity", quantity, "se or omega_se")->capture_default_str();
    }
    sub->callback([&fit_kind, kind] { fit_kind = kind; });
  }

  auto* reproduce = app.add_subcommand("reproduce", "run the closed-loop comparison and acceptance table");
  unsigned workers = 1;
  reproduce->add_option("--seed", common.seed, "random seed")->capture_default_str();
  reproduce->add_option("--out", common.out, "output directory")->capture_default_str();
  reproduce->add_option("--workers", workers, "simulation threads")->capture_default_str();
  reproduce->add_flag("--fast", common.fast, "reduced trial counts and looser tolerances");
  common.seed = ReproduceOptions{}.seed;
  std::uint64_t default_seed = common.seed;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorKind::config);
  }

  try {
    if (simulate->parsed()) {
      if (common.seed == default_seed && !simulate->get_subcommands().front()->count("--seed")) common.seed = 1;
      cmd_simulate(sim_kind, common);
    } else if (fit->parsed()) {
      cmd_fit(fit_kind, common, inputs, quantity);
    } else {
      return cmd_reproduce(common, workers);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "heatrate: error [%s] %s\n", to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "heatrate: error [io] %s\n", e.what());
    return exit_code(ErrorKind::io);
  }
  return 0;
}
