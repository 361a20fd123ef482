#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace flowsplat {

// One Gaussian primitive. Scales live in log space so integration can never
// make them non-positive.
struct GaussianState {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d log_scale = Eigen::Vector3d::Zero();
  Eigen::Vector3d color = Eigen::Vector3d::Constant(0.5);
  double opacity = 1.0;
};

struct Aabb {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Ones();

  bool contains(const Eigen::Vector3d& p) const;
  Aabb expanded(const Eigen::Vector3d& p) const;
  Eigen::Vector3d extent() const { return max - min; }
  Eigen::Vector3d center() const { return 0.5 * (min + max); }
};

// Ordered set of Gaussians at a normalized sequence time in [0, 1]. Index i
// names the same primitive at every time.
struct GaussianCloud {
  std::vector<GaussianState> gaussians;
  double time = 0.0;
  Aabb bounds;

  std::size_t size() const { return gaussians.size(); }
  // Grows bounds to cover every position. Never moves a Gaussian.
  void refit_bounds();
};

// Tight axis-aligned box around the positions (unit box if the cloud is empty).
Aabb bounding_box(const GaussianCloud& cloud);

struct CameraSpec {
  Eigen::Vector3d eye{0.5, 0.5, -2.0};
  Eigen::Vector3d look_at{0.5, 0.5, 0.5};
  Eigen::Vector3d up{0.0, -1.0, 0.0};
  double vertical_fov = 0.8;
  int width = 64;
  int height = 64;
  double near = 0.01;
};

// Throws ValidationError naming the offending field.
void validate(const CameraSpec& camera);

// Throws ValidationError naming "gaussians[i].<field>".
void validate(const GaussianState& g, std::size_t index);
void validate(const GaussianCloud& cloud);

// Ground-truth centers: positions[frame][gaussian].
struct GroundTruth {
  std::vector<double> times;
  std::vector<std::vector<Eigen::Vector3d>> positions;

  std::size_t frame_count() const { return times.size(); }
};

// Replaces the cloud's positions with ground-truth frame `frame`.
GaussianCloud cloud_at_frame(const GaussianCloud& base, const GroundTruth& truth,
                             std::size_t frame);

}  // namespace flowsplat
