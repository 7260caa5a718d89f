#include "citerate/manifest.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>

#include "citerate/errors.hpp"

namespace citerate::cli {

std::uint64_t fnv1a64(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

InputDigest digest_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open '" + path + "' for digest");
  InputDigest d;
  d.path = path;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const auto n = static_cast<std::size_t>(in.gcount());
    for (std::size_t i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    d.bytes += n;
    if (in.eof()) break;
  }
  char hex[32];
  std::snprintf(hex, sizeof(hex), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  d.digest = hex;
  return d;
}

std::string config_hash(const nlohmann::json& config) {
  const std::string dump = config.dump();  // sorted keys, canonical
  char hex[20];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(fnv1a64(dump.data(), dump.size())));
  return hex;
}

std::string iso_utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const RunManifest& m, const std::string& path) {
  nlohmann::json j;
  j["subcommand"] = m.subcommand;
  j["config"] = m.config;
  j["seed"] = m.seed;
  j["inputs"] = nlohmann::json::array();
  for (const auto& in : m.inputs)
    j["inputs"].push_back({{"path", in.path}, {"digest", in.digest}, {"bytes", in.bytes}});
  j["artifacts"] = m.artifacts;
  j["started_at"] = m.started_at;
  j["duration_ms"] = m.duration_ms;
  j["status"] = m.status;
  if (!m.error.empty()) j["error"] = m.error;
  std::ofstream out(path);
  if (!out) throw data_error("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw data_error("write failed for '" + path + "'");
}

}  // namespace citerate::cli
