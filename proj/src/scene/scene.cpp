#include "flowsplat/scene.hpp"

#include <cmath>
#include <string>

#include "flowsplat/error.hpp"

namespace flowsplat {

namespace {

bool finite3(const Eigen::Vector3d& v) { return v.allFinite(); }

std::string field_name(std::size_t index, const char* field) {
  return "gaussians[" + std::to_string(index) + "]." + field;
}

}  // namespace

bool Aabb::contains(const Eigen::Vector3d& p) const {
  return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
}

Aabb Aabb::expanded(const Eigen::Vector3d& p) const {
  return Aabb{min.cwiseMin(p), max.cwiseMax(p)};
}

void GaussianCloud::refit_bounds() {
  for (const auto& g : gaussians) {
    if (!bounds.contains(g.position)) bounds = bounds.expanded(g.position);
  }
}

Aabb bounding_box(const GaussianCloud& cloud) {
  if (cloud.gaussians.empty()) return Aabb{};
  Aabb box{cloud.gaussians.front().position, cloud.gaussians.front().position};
  for (const auto& g : cloud.gaussians) box = box.expanded(g.position);
  return box;
}

void validate(const CameraSpec& camera) {
  if (!finite3(camera.eye)) throw ValidationError("camera.eye is not finite");
  if (!finite3(camera.look_at)) throw ValidationError("camera.look_at is not finite");
  if (!finite3(camera.up)) throw ValidationError("camera.up is not finite");
  const Eigen::Vector3d forward = camera.look_at - camera.eye;
  if (forward.norm() == 0.0) throw ValidationError("camera.look_at coincides with camera.eye");
  if (camera.up.cross(forward).norm() <= 1e-12 * camera.up.norm() * forward.norm())
    throw ValidationError("camera.up is parallel to the viewing direction");
  if (!(camera.vertical_fov > 0.0 && camera.vertical_fov < M_PI))
    throw ValidationError("camera.vertical_fov must lie in (0, pi)");
  if (camera.width <= 0 || camera.height <= 0)
    throw ValidationError("camera.width and camera.height must be positive");
  if (!(camera.near > 0.0)) throw ValidationError("camera.near must be positive");
}

void validate(const GaussianState& g, std::size_t index) {
  if (!finite3(g.position)) throw ValidationError(field_name(index, "position") + " is not finite");
  if (!g.rotation.coeffs().allFinite() || std::abs(g.rotation.norm() - 1.0) > 1e-6)
    throw ValidationError(field_name(index, "rotation") + " is not a unit quaternion");
  if (!finite3(g.log_scale) || !g.log_scale.array().exp().allFinite() ||
      (g.log_scale.array().exp() <= 0.0).any())
    throw ValidationError(field_name(index, "log_scale") + " does not give a positive finite scale");
  if (!finite3(g.color) || (g.color.array() < 0.0).any() || (g.color.array() > 1.0).any())
    throw ValidationError(field_name(index, "color") + " must lie in [0,1]");
  if (!std::isfinite(g.opacity) || g.opacity < 0.0 || g.opacity > 1.0)
    throw ValidationError(field_name(index, "opacity") + " must lie in [0,1]");
}

void validate(const GaussianCloud& cloud) {
  for (std::size_t i = 0; i < cloud.gaussians.size(); ++i) validate(cloud.gaussians[i], i);
  if (!std::isfinite(cloud.time)) throw ValidationError("time is not finite");
}

GaussianCloud cloud_at_frame(const GaussianCloud& base, const GroundTruth& truth,
                             std::size_t frame) {
  if (frame >= truth.frame_count())
    throw ValidationError("frame index " + std::to_string(frame) + " out of range");
  const auto& positions = truth.positions[frame];
  if (positions.size() != base.size())
    throw ValidationError("trajectories.positions[" + std::to_string(frame) +
                          "] has the wrong Gaussian count");
  GaussianCloud out = base;
  out.time = truth.times[frame];
  for (std::size_t i = 0; i < out.size(); ++i) out.gaussians[i].position = positions[i];
  out.refit_bounds();
  return out;
}

}  // namespace flowsplat
