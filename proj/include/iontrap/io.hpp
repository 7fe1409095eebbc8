#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "iontrap/rates.hpp"
#include "iontrap/recool.hpp"
#include "iontrap/sideband.hpp"
#include "iontrap/survey.hpp"

namespace iontrap::io {

/// Shortest text that reads back to the same double (%.17g).
std::string format_double(double v);

/// Writes the whole file or throws Error(io).
void write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

// Recool traces: delay_s, bin_start_s, bin_width_s, counts, repeats; one row per bin.
void write_recool_traces(std::ostream& out, std::span<const RecoolTrace> traces);
std::vector<RecoolTrace> read_recool_traces(std::istream& in);
void write_recool_traces(const std::filesystem::path& path, std::span<const RecoolTrace> traces);
std::vector<RecoolTrace> read_recool_traces(const std::filesystem::path& path);

// Sideband scans: detuning_hz, mean_counts, stderr. The probe duration is not
// part of the format and is passed in when reading.
void write_scan(std::ostream& out, const SidebandScan& scan);
SidebandScan read_scan(std::istream& in, double probe_duration);
void write_scan(const std::filesystem::path& path, const SidebandScan& scan);
SidebandScan read_scan(const std::filesystem::path& path, double probe_duration);

nlohmann::json to_json(const HeatingDataset& ds);
HeatingDataset heating_dataset_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RecoolFit& fit);
nlohmann::json to_json(const SidebandFit& fit);
nlohmann::json to_json(const RateResult& r);
nlohmann::json to_json(const NoisePoint& p);
nlohmann::json to_json(const PowerLawFit& f);
nlohmann::json to_json(const DistanceScalingFit& f);

struct PlotRow {
  double x = 0, y = 0, yerr = 0;
};
/// Plot-ready x, y, yerr CSV.
void write_plot_csv(const std::filesystem::path& path, std::span<const PlotRow> rows);

}  // namespace iontrap::io
