#include "flowsplat/manifest.hpp"

#include <cstdio>
#include <fstream>

#include "flowsplat/error.hpp"
#include "flowsplat/scene_io.hpp"

namespace flowsplat {

using nlohmann::json;

std::string fnv1a64_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

json manifest_to_json(const RunManifest& m) {
  json arts = json::array();
  for (const auto& a : m.artifacts) arts.push_back({{"path", a.path}, {"fnv1a64", a.fnv1a64}});
  return json{{"format", "flowsplat-manifest-v1"},
              {"command", m.command},
              {"config", m.config},
              {"seed", m.seed},
              {"out", m.out_dir},
              {"artifacts", arts},
              {"extra", m.extra}};
}

RunManifest manifest_from_json(const json& j) {
  try {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.config = j.at("config");
    m.seed = j.at("seed").get<std::uint64_t>();
    m.out_dir = j.at("out").get<std::string>();
    for (const auto& a : j.at("artifacts"))
      m.artifacts.push_back({a.at("path").get<std::string>(), a.at("fnv1a64").get<std::string>()});
    m.extra = j.value("extra", json::object());
    return m;
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
}

void write_manifest(RunManifest& m, const std::filesystem::path& out_dir) {
  for (auto& a : m.artifacts) a.fnv1a64 = fnv1a64_file(out_dir / a.path);
  write_text_file(out_dir / kManifestName, manifest_to_json(m).dump(1) + "\n");
}

RunManifest read_manifest(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return manifest_from_json(j);
}

}  // namespace flowsplat
