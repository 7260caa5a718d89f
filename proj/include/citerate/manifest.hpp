#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace citerate::cli {

struct InputDigest {
  std::string path;
  std::string digest;  // fnv1a-64 hex
  std::uint64_t bytes = 0;
};

/// Written before exit on both success and failure paths; re-running with the
/// recorded config + seed reproduces the draw files byte-identically.
struct RunManifest {
  std::string subcommand;
  nlohmann::json config;  // full resolved configuration
  std::uint64_t seed = 0;
  std::vector<InputDigest> inputs;
  std::vector<std::string> artifacts;
  std::string started_at;
  double duration_ms = 0.0;
  std::string status = "ok";  // "ok" or "failed"
  std::string error;
};

std::uint64_t fnv1a64(const void* data, std::size_t len);
InputDigest digest_file(const std::string& path);

/// Hex hash of the resolved config JSON (canonical dump); names run
/// directories together with the seed.
std::string config_hash(const nlohmann::json& config);

void write_manifest(const RunManifest& m, const std::string& path);

std::string iso_utc_now();

}  // namespace citerate::cli
