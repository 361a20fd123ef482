#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowsplat/scene.hpp"

namespace flowsplat {

inline constexpr std::size_t kDefaultNeighborCount = 8;

// Everything a scene document carries. `field` is the optional generating
// field specification (see field_spec.hpp), kept as raw JSON.
struct SceneFile {
  GaussianCloud cloud;
  std::optional<GroundTruth> truth;
  std::vector<CameraSpec> cameras;
  std::size_t neighbor_count = kDefaultNeighborCount;
  std::optional<nlohmann::json> field;
  // Initial auxiliary velocities for second-order fields, one per Gaussian.
  std::optional<std::vector<Eigen::Vector3d>> velocities;
};

// Throws ParseError for malformed documents and ValidationError for invariant
// violations; both name the offending field and index.
SceneFile parse_scene(const nlohmann::json& doc);
SceneFile load_scene(const std::filesystem::path& path);

nlohmann::json scene_to_json(const SceneFile& scene);
void save_scene(const SceneFile& scene, const std::filesystem::path& path);

nlohmann::json gaussian_to_json(const GaussianState& g);
GaussianState gaussian_from_json(const nlohmann::json& j, const std::string& where);
nlohmann::json camera_to_json(const CameraSpec& c);
CameraSpec camera_from_json(const nlohmann::json& j, const std::string& where);
nlohmann::json vec3_to_json(const Eigen::Vector3d& v);
Eigen::Vector3d vec3_from_json(const nlohmann::json& j, const std::string& where);

// CSV with header frame_index,time,gaussian_index,x,y,z; reals printed with
// 17 significant digits so files round-trip exactly.
void write_trajectory_csv(const std::filesystem::path& path, const std::vector<double>& times,
                          const std::vector<std::vector<Eigen::Vector3d>>& positions);
GroundTruth read_trajectory_csv(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace flowsplat
