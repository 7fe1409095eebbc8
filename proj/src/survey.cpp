#include "iontrap/survey.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "iontrap/constants.hpp"
#include "iontrap/error.hpp"

namespace iontrap {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      out.push_back(trim(field));
      field.clear();
    } else {
      field += ch;
    }
  }
  out.push_back(trim(field));
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  std::size_t used = 0;
  try {
    out = std::stod(s, &used);
  } catch (...) {
    return false;
  }
  return used == s.size() && std::isfinite(out);
}

}  // namespace

SurveyData ingest_survey(std::istream& in) {
  SurveyData data;
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> column;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto fields = split_csv(line);
    if (!have_header) {
      for (std::size_t i = 0; i < fields.size(); ++i) column[fields[i]] = i;
      for (const char* required : {"species", "d_um", "omega_mhz", "se_v2m2hz", "source"}) {
        if (!column.count(required)) {
          throw Error(ErrorKind::io, "survey", std::string("missing required column '") + required + "'");
        }
      }
      have_header = true;
      continue;
    }
    auto field = [&](const char* name) -> const std::string& {
      static const std::string empty;
      const auto i = column.at(name);
      return i < fields.size() ? fields[i] : empty;
    };
    SurveyEntry e;
    double d_um = 0, f_mhz = 0, se = 0;
    std::string problem;
    if (!parse_double(field("d_um"), d_um)) {
      problem = "d_um is not a number";
    } else if (!(d_um > 0)) {
      problem = "d_um must be > 0";
    } else if (!parse_double(field("omega_mhz"), f_mhz) || !(f_mhz > 0)) {
      problem = "omega_mhz must be a number > 0";
    } else if (!parse_double(field("se_v2m2hz"), se)) {
      problem = "se_v2m2hz is not a number";
    } else if (!(se > 0)) {
      problem = "se_v2m2hz must be > 0";
    }
    if (!problem.empty()) {
      data.issues.push_back({line_no, problem});
      continue;
    }
    e.species = field("species");
    e.source = field("source");
    e.d = d_um * 1e-6;
    e.omega = f_mhz * 1e6 * constants::two_pi;
    e.S_E = se;
    data.entries.push_back(std::move(e));
  }
  if (!have_header) data.warnings.push_back("survey file is empty");
  return data;
}

SurveyData ingest_survey(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "survey", "cannot open " + path.string());
  return ingest_survey(in);
}

double survey_value(const SurveyEntry& e, SurveyQuantity quantity) {
  return quantity == SurveyQuantity::S_E ? e.S_E : e.omega * e.S_E;
}

DistanceScalingFit distance_scaling_fit(const std::vector<SurveyEntry>& entries, SurveyQuantity quantity,
                                        double reference_exponent) {
  if (entries.size() < 3) {
    throw Error(ErrorKind::degenerate_design, "survey", "distance scaling needs >= 3 entries");
  }
  double d_min = INFINITY, d_max = 0;
  for (const auto& e : entries) {
    if (!(e.d > 0) || !(survey_value(e, quantity) > 0)) {
      throw Error(ErrorKind::data_quality, "survey", "entries need d > 0 and positive values");
    }
    d_min = std::min(d_min, e.d);
    d_max = std::max(d_max, e.d);
  }
  if (d_max < 2.0 * d_min) {
    throw Error(ErrorKind::degenerate_design, "survey", "entries span less than a factor 2 in d");
  }
  const std::size_t n = entries.size();
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::log10(entries[i].d);
    y[i] = std::log10(survey_value(entries[i], quantity));
  }
  double xm = 0, ym = 0;
  for (std::size_t i = 0; i < n; ++i) {
    xm += x[i];
    ym += y[i];
  }
  xm /= static_cast<double>(n);
  ym /= static_cast<double>(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - xm) * (x[i] - xm);
    sxy += (x[i] - xm) * (y[i] - ym);
  }
  DistanceScalingFit fit;
  fit.exponent = sxy / sxx;
  fit.log10_prefactor = ym - fit.exponent * xm;
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - fit.log10_prefactor - fit.exponent * x[i];
    ss += r * r;
  }
  fit.exponent_stderr = n > 2 ? std::sqrt(ss / static_cast<double>(n - 2) / sxx) : 0.0;

  // Band anchor from the other entries: mean of y - k x with the slope held at the reference.
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) total += y[i] - reference_exponent * x[i];
  for (std::size_t i = 0; i < n; ++i) {
    const double own = y[i] - reference_exponent * x[i];
    const double anchor = (total - own) / static_cast<double>(n - 1);
    fit.residuals.push_back({i, own - anchor});
  }
  return fit;
}

}  // namespace iontrap
