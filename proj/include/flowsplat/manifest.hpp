#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace flowsplat {

struct Artifact {
  std::string path;  // relative to the output directory
  std::string fnv1a64;  // 16 lowercase hex digits of the file's FNV-1a hash
};

// Record of one CLI run. `config` is the fully resolved option set, so
// executing `command` with it again reproduces the artifacts.
struct RunManifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string out_dir;
  std::vector<Artifact> artifacts;
  nlohmann::json extra = nlohmann::json::object();
};

std::string fnv1a64_file(const std::filesystem::path& path);

nlohmann::json manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);

inline constexpr const char* kManifestName = "manifest.json";

// Hashes every artifact (paths relative to out_dir) and writes
// out_dir/manifest.json.
void write_manifest(RunManifest& m, const std::filesystem::path& out_dir);
RunManifest read_manifest(const std::filesystem::path& path);

}  // namespace flowsplat
