#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "flowsplat/scene.hpp"
#include "flowsplat/scene_io.hpp"

namespace flowsplat {

struct SyntheticOptions {
  std::string kind = "drift";  // analytic kind or "zero"
  nlohmann::json params = nlohmann::json::object();
  std::size_t gaussians = 50;
  std::size_t frames = 20;
  std::uint64_t seed = 0;
  // Ground-truth integration resolution: 10x the default 100 steps per unit.
  int gt_steps_per_unit = 1000;
  CameraSpec camera;
};

// Random cloud in the unit box: small random-orientation Gaussians with
// random colors. Orbital scenes keep every Gaussian at least 0.15 from the
// attractor and start on tangential circular-orbit velocities.
SceneFile generate_scene(const SyntheticOptions& options);

}  // namespace flowsplat
