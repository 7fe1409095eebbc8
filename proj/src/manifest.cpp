#include "iontrap/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>

#include "iontrap/io.hpp"

namespace iontrap {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const nlohmann::json& physics_config) {
  // nlohmann::json objects are std::map backed, so dump() is already key-sorted.
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(physics_config.dump())));
  return buf;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json RunManifest::to_json() const {
  return {{"command", command}, {"config_hash", config_hash}, {"seed", seed},      {"inputs", inputs},
          {"outputs", outputs}, {"tool_version", tool_version}, {"timestamp", timestamp}};
}

void RunManifest::write(const std::filesystem::path& dir) {
  timestamp = utc_timestamp();
  io::write_json(dir / "manifest.json", to_json());
}

}  // namespace iontrap
