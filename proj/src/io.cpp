#include "iontrap/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "iontrap/constants.hpp"
#include "iontrap/error.hpp"

namespace iontrap::io {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(trim(f));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& s, std::size_t line, const char* what) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (...) {
    used = 0;
  }
  if (used == 0 || used != s.size()) {
    throw Error(ErrorKind::io, "io", "line " + std::to_string(line) + ": bad " + what + " '" + s + "'");
  }
  return v;
}

// Header-indexed CSV reader; rows as vectors of strings in `columns` order.
struct Table {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

Table read_table(std::istream& in, const std::vector<std::string>& columns) {
  Table t;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::size_t> index;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto fields = split(line);
    if (index.empty()) {
      std::map<std::string, std::size_t> pos;
      for (std::size_t i = 0; i < fields.size(); ++i) pos[fields[i]] = i;
      for (const auto& c : columns) {
        auto it = pos.find(c);
        if (it == pos.end()) throw Error(ErrorKind::io, "io", "missing column '" + c + "'");
        index.push_back(it->second);
      }
      continue;
    }
    std::vector<std::string> row;
    for (auto i : index) {
      if (i >= fields.size()) throw Error(ErrorKind::io, "io", "line " + std::to_string(line_no) + ": too few fields");
      row.push_back(fields[i]);
    }
    t.rows.push_back(std::move(row));
    t.line_numbers.push_back(line_no);
  }
  if (index.empty()) throw Error(ErrorKind::io, "io", "empty CSV (no header)");
  return t;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "io", "cannot open " + path.string());
  return in;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "io", "cannot write " + path.string());
  out << content;
  out.flush();
  if (!out) throw Error(ErrorKind::io, "io", "write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::io, "io", path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

void write_recool_traces(std::ostream& out, std::span<const RecoolTrace> traces) {
  out << "delay_s,bin_start_s,bin_width_s,counts,repeats\n";
  for (const auto& tr : traces) {
    for (std::size_t i = 0; i < tr.bins(); ++i) {
      out << format_double(tr.delay) << ',' << format_double(tr.bin_edges[i]) << ','
          << format_double(tr.bin_width(i)) << ',' << format_double(tr.counts[i]) << ',' << tr.repeats << '\n';
    }
  }
}

std::vector<RecoolTrace> read_recool_traces(std::istream& in) {
  const auto table = read_table(in, {"delay_s", "bin_start_s", "bin_width_s", "counts", "repeats"});
  std::vector<RecoolTrace> traces;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto ln = table.line_numbers[r];
    const double delay = to_double(row[0], ln, "delay_s");
    const double start = to_double(row[1], ln, "bin_start_s");
    const double width = to_double(row[2], ln, "bin_width_s");
    const double counts = to_double(row[3], ln, "counts");
    const double repeats = to_double(row[4], ln, "repeats");
    if (!(width > 0) || repeats < 1) {
      throw Error(ErrorKind::io, "io", "line " + std::to_string(ln) + ": bin width and repeats must be positive");
    }
    // A new trace starts when the delay changes.
    if (traces.empty() || traces.back().delay != delay) {
      RecoolTrace tr;
      tr.delay = delay;
      tr.repeats = static_cast<std::size_t>(repeats);
      tr.bin_edges.push_back(start);
      traces.push_back(std::move(tr));
    }
    auto& tr = traces.back();
    // Gapless bins share edges; a gap is not representable.
    const double prev_end = tr.bin_edges.back();
    if (std::abs(start - prev_end) > 1e-6 * width) {
      throw Error(ErrorKind::io, "io", "line " + std::to_string(ln) + ": bins are not contiguous");
    }
    tr.bin_edges.push_back(start + width);
    tr.counts.push_back(counts);
  }
  return traces;
}

void write_recool_traces(const std::filesystem::path& path, std::span<const RecoolTrace> traces) {
  std::ostringstream ss;
  write_recool_traces(ss, traces);
  write_text(path, ss.str());
}

std::vector<RecoolTrace> read_recool_traces(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_recool_traces(in);
}

void write_scan(std::ostream& out, const SidebandScan& scan) {
  out << "detuning_hz,mean_counts,stderr\n";
  for (std::size_t i = 0; i < scan.size(); ++i) {
    out << format_double(scan.detunings[i]) << ',' << format_double(scan.signal[i]) << ','
        << format_double(scan.standard_error[i]) << '\n';
  }
}

SidebandScan read_scan(std::istream& in, double probe_duration) {
  const auto table = read_table(in, {"detuning_hz", "mean_counts", "stderr"});
  SidebandScan scan;
  scan.probe_duration = probe_duration;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto ln = table.line_numbers[r];
    scan.detunings.push_back(to_double(table.rows[r][0], ln, "detuning_hz"));
    scan.signal.push_back(to_double(table.rows[r][1], ln, "mean_counts"));
    scan.standard_error.push_back(to_double(table.rows[r][2], ln, "stderr"));
  }
  return scan;
}

void write_scan(const std::filesystem::path& path, const SidebandScan& scan) {
  std::ostringstream ss;
  write_scan(ss, scan);
  write_text(path, ss.str());
}

SidebandScan read_scan(const std::filesystem::path& path, double probe_duration) {
  auto in = open_in(path);
  return read_scan(in, probe_duration);
}

nlohmann::json to_json(const HeatingDataset& ds) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : ds.points) pts.push_back({{"delay_s", p.delay}, {"nbar", p.nbar}, {"sigma", p.sigma}});
  return {{"method", to_string(ds.method)},
          {"trap_frequency_mhz", ds.trap_frequency / constants::two_pi / 1e6},
          {"points", pts}};
}

HeatingDataset heating_dataset_from_json(const nlohmann::json& j) {
  try {
    HeatingDataset ds;
    ds.method = method_from_string(j.at("method").get<std::string>());
    ds.trap_frequency = j.at("trap_frequency_mhz").get<double>() * 1e6 * constants::two_pi;
    for (const auto& p : j.at("points")) {
      ds.points.push_back({p.at("delay_s").get<double>(), p.at("nbar").get<double>(), p.at("sigma").get<double>()});
    }
    return ds;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::io, "io", std::string("heating dataset: ") + e.what());
  }
}

nlohmann::json to_json(const RecoolFit& f) {
  return {{"E0_J", f.E0},         {"E0_stderr_J", f.E0_stderr},
          {"nbar0", f.nbar0},     {"nbar0_stderr", f.nbar0_stderr},
          {"nbar0_fit_stderr", f.nbar0_fit_stderr}, {"nbar0_ensemble_stderr", f.nbar0_ensemble_stderr},
          {"scale_cps", f.scale}, {"scale_stderr_cps", f.scale_stderr},
          {"background_cps", f.background}, {"background_stderr_cps", f.background_stderr},
          {"reduced_chi2", f.reduced_chi2}, {"dof", f.dof}, {"iterations", f.iterations}};
}

nlohmann::json to_json(const SidebandFit& f) {
  return {{"ratio", f.ratio},
          {"ratio_stderr", f.ratio_stderr},
          {"nbar", f.nbar},
          {"nbar_stderr", f.nbar_stderr},
          {"red", {{"amplitude", f.red_amplitude}, {"amplitude_stderr", f.red_amplitude_stderr},
                   {"center_hz", f.red_center}, {"width_hz", f.red_width}, {"reduced_chi2", f.red_reduced_chi2},
                   {"window_hz", {f.red_window.first, f.red_window.second}}}},
          {"blue", {{"amplitude", f.blue_amplitude}, {"amplitude_stderr", f.blue_amplitude_stderr},
                    {"center_hz", f.blue_center}, {"width_hz", f.blue_width}, {"reduced_chi2", f.blue_reduced_chi2},
                    {"window_hz", {f.blue_window.first, f.blue_window.second}}}},
          {"red_shape_from_blue", f.red_shape_from_blue},
          {"flagged", f.flagged},
          {"flag_reason", f.flag_reason}};
}

nlohmann::json to_json(const RateResult& r) {
  return {{"rate_per_s", r.rate}, {"rate_stderr_per_s", r.rate_stderr}, {"chi2", r.chi2},
          {"reduced_chi2", r.reduced_chi2}, {"dof", r.dof}};
}

nlohmann::json to_json(const NoisePoint& p) {
  return {{"omega_rad_s", p.omega}, {"S_E_v2m2hz", p.S_E}, {"S_E_stderr_v2m2hz", p.S_E_stderr}};
}

nlohmann::json to_json(const PowerLawFit& f) {
  return {{"exponent", f.exponent},           {"exponent_stderr", f.exponent_stderr},
          {"log_prefactor", f.log_prefactor}, {"log_prefactor_stderr", f.log_prefactor_stderr},
          {"reduced_chi2", f.reduced_chi2}};
}

nlohmann::json to_json(const DistanceScalingFit& f) {
  nlohmann::json res = nlohmann::json::array();
  for (const auto& r : f.residuals) res.push_back({{"index", r.index}, {"residual_decades", r.residual_decades}});
  return {{"exponent", f.exponent}, {"exponent_stderr", f.exponent_stderr},
          {"log10_prefactor", f.log10_prefactor}, {"residuals", res}};
}

void write_plot_csv(const std::filesystem::path& path, std::span<const PlotRow> rows) {
  std::ostringstream ss;
  ss << "x,y,yerr\n";
  for (const auto& r : rows) ss << format_double(r.x) << ',' << format_double(r.y) << ',' << format_double(r.yerr) << '\n';
  write_text(path, ss.str());
}

}  // namespace iontrap::io
