#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace iontrap {

inline constexpr const char* kToolVersion = "0.1.0";

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// Hash of the canonical (sorted-key, compact) dump of a physics config, as 16 hex digits.
std::string config_hash(const nlohmann::json& physics_config);

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string tool_version = kToolVersion;
  std::string timestamp;  // UTC, ISO 8601

  nlohmann::json to_json() const;
  /// Stamps the current time and writes manifest.json into `dir`.
  void write(const std::filesystem::path& dir);
};

std::string utc_timestamp();

}  // namespace iontrap
