#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace iontrap {

struct SurveyEntry {
  std::string species;
  double d = 0;      // m, ion to nearest electrode
  double omega = 0;  // rad/s
  double S_E = 0;    // V^2 m^-2 Hz^-1
  std::string source;
};

struct IngestIssue {
  std::size_t line = 0;  // 1-based, header is line 1
  std::string message;
};

struct SurveyData {
  std::vector<SurveyEntry> entries;
  std::vector<IngestIssue> issues;    // rejected rows
  std::vector<std::string> warnings;  // e.g. empty file
};

/// CSV with header containing species, d_um, omega_mhz (omega/2pi in MHz),
/// se_v2m2hz, source, in any order. Bad rows are reported and skipped; a
/// missing required column throws Error(io).
SurveyData ingest_survey(std::istream& in);
SurveyData ingest_survey(const std::filesystem::path& path);

enum class SurveyQuantity { S_E, omega_S_E };

struct ScalingResidual {
  std::size_t index = 0;
  double residual_decades = 0;  // log10(value) minus the d^-4 band anchored on the other entries
};

struct DistanceScalingFit {
  double exponent = 0;
  double exponent_stderr = 0;
  double log10_prefactor = 0;  // value at d = 1 m
  std::vector<ScalingResidual> residuals;
};

/// Unweighted log-log regression of S_E (or omega S_E) against d, plus the
/// leave-one-out residual of each entry from a d^reference_exponent band.
/// Needs >= 3 entries spanning at least a factor 2 in d (degenerate_design otherwise).
DistanceScalingFit distance_scaling_fit(const std::vector<SurveyEntry>& entries,
                                        SurveyQuantity quantity = SurveyQuantity::S_E,
                                        double reference_exponent = -4.0);

double survey_value(const SurveyEntry& e, SurveyQuantity quantity);

}  // namespace iontrap
