#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "flowsplat/scene.hpp"

namespace flowsplat {

// Row-major RGB image with channels in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;  // 3 * width * height

  Image() = default;
  Image(int width, int height, double fill = 0.0);

  double& at(int x, int y, int c) { return pixels[index(x, y, c)]; }
  double at(int x, int y, int c) const { return pixels[index(x, y, c)]; }
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width + x) * 3 + c;
  }
};

// Pinhole view: camera z looks from eye to look_at, image x runs along
// z cross up and image y along z cross x (so `up` points toward smaller rows).
struct CameraFrame {
  Eigen::Matrix3d rotation;  // rows: camera x, y, z in world coordinates
  Eigen::Vector3d eye;
  double focal = 0.0;  // pixels
  double cx = 0.0;
  double cy = 0.0;

  Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const;
};

CameraFrame camera_frame(const CameraSpec& camera);

struct Projection {
  Eigen::Vector2d mean;  // pixel coordinates; pixel (i, j) has its center at (i + 0.5, j + 0.5)
  Eigen::Matrix2d covariance;
  double depth = 0.0;
};

struct RenderStats {
  std::size_t behind_near = 0;
  std::size_t degenerate = 0;
};

// World covariance R diag(exp(s))^2 R^T carried through the view rotation and
// the projection Jacobian. Returns nullopt when depth <= near or the 2D
// covariance is not invertible; `stats` counts the discards.
std::optional<Projection> project(const GaussianState& g, const CameraSpec& camera,
                                  RenderStats* stats = nullptr);

// Front-to-back alpha compositing over a black background. Gaussians are
// depth-sorted (ties by index) and evaluated within a 3-sigma box; per-sample
// alpha is min(0.999, opacity * exp(-d^T Sigma^-1 d / 2)).
Image rasterize(const GaussianCloud& cloud, const CameraSpec& camera,
                RenderStats* stats = nullptr);

// Binary PPM (P6, max 255); channel values map to floor(v * 255 + 0.5).
void write_ppm(const std::filesystem::path& path, const Image& image);
Image read_ppm(const std::filesystem::path& path);

}  // namespace flowsplat
