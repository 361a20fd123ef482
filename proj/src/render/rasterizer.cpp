#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Geometry>

#include "flowsplat/error.hpp"
#include "flowsplat/render.hpp"

namespace flowsplat {

Image::Image(int w, int h, double fill) : width(w), height(h) {
  if (w <= 0 || h <= 0) throw ValidationError("image dimensions must be positive");
  pixels.assign(3 * static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill);
}

Eigen::Vector3d CameraFrame::to_camera(const Eigen::Vector3d& world) const {
  return rotation * (world - eye);
}

CameraFrame camera_frame(const CameraSpec& camera) {
  validate(camera);
  const Eigen::Vector3d z = (camera.look_at - camera.eye).normalized();
  const Eigen::Vector3d x = z.cross(camera.up).normalized();
  const Eigen::Vector3d y = z.cross(x);
  CameraFrame f;
  f.rotation.row(0) = x.transpose();
  f.rotation.row(1) = y.transpose();
  f.rotation.row(2) = z.transpose();
  f.eye = camera.eye;
  f.focal = 0.5 * camera.height / std::tan(0.5 * camera.vertical_fov);
  f.cx = 0.5 * camera.width;
  f.cy = 0.5 * camera.height;
  return f;
}

namespace {

std::optional<Projection> project_with(const GaussianState& g, const CameraFrame& frame,
                                       double near, RenderStats* stats) {
  const Eigen::Vector3d c = frame.to_camera(g.position);
  if (!(c.z() > near)) {
    if (stats) ++stats->behind_near;
    return std::nullopt;
  }
  const Eigen::Matrix3d r = g.rotation.normalized().toRotationMatrix();
  const Eigen::Vector3d s2 = (2.0 * g.log_scale).array().exp();
  const Eigen::Matrix3d world_cov = r * s2.asDiagonal() * r.transpose();
  const Eigen::Matrix3d view_cov = frame.rotation * world_cov * frame.rotation.transpose();

  const double iz = 1.0 / c.z();
  Eigen::Matrix<double, 2, 3> j;
  j << frame.focal * iz, 0.0, -frame.focal * c.x() * iz * iz,
      0.0, frame.focal * iz, -frame.focal * c.y() * iz * iz;
  Projection p;
  p.covariance = j * view_cov * j.transpose();
  p.covariance(0, 1) = p.covariance(1, 0) = 0.5 * (p.covariance(0, 1) + p.covariance(1, 0));
  p.mean = {frame.focal * c.x() * iz + frame.cx, frame.focal * c.y() * iz + frame.cy};
  p.depth = c.z();
  const double det = p.covariance.determinant();
  if (!(det > 0.0) || !std::isfinite(det) || !p.mean.allFinite()) {
    if (stats) ++stats->degenerate;
    return std::nullopt;
  }
  return p;
}

}  // namespace

std::optional<Projection> project(const GaussianState& g, const CameraSpec& camera,
                                  RenderStats* stats) {
  return project_with(g, camera_frame(camera), camera.near, stats);
}

Image rasterize(const GaussianCloud& cloud, const CameraSpec& camera, RenderStats* stats) {
  const CameraFrame frame = camera_frame(camera);
  Image image(camera.width, camera.height, 0.0);
  std::vector<double> transmittance(static_cast<std::size_t>(camera.width) * camera.height, 1.0);

  std::vector<std::pair<std::size_t, Projection>> visible;
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (auto p = project_with(cloud.gaussians[i], frame, camera.near, stats))
      visible.emplace_back(i, *p);
  std::stable_sort(visible.begin(), visible.end(), [](const auto& a, const auto& b) {
    if (a.second.depth != b.second.depth) return a.second.depth < b.second.depth;
    return a.first < b.first;
  });

  for (const auto& [index, p] : visible) {
    const GaussianState& g = cloud.gaussians[index];
    if (g.opacity <= 0.0) continue;
    const Eigen::Matrix2d inv = p.covariance.inverse();
    const double rx = 3.0 * std::sqrt(p.covariance(0, 0));
    const double ry = 3.0 * std::sqrt(p.covariance(1, 1));
    // Pixels whose centers (i + 0.5) fall inside the 3-sigma box.
    const double x_lo = std::ceil(p.mean.x() - rx - 0.5);
    const double x_hi = std::floor(p.mean.x() + rx - 0.5);
    const double y_lo = std::ceil(p.mean.y() - ry - 0.5);
    const double y_hi = std::floor(p.mean.y() + ry - 0.5);
    if (x_hi < 0.0 || y_hi < 0.0 || x_lo > camera.width - 1 || y_lo > camera.height - 1) continue;
    const int x0 = static_cast<int>(std::max(0.0, x_lo));
    const int x1 = static_cast<int>(std::min<double>(camera.width - 1, x_hi));
    const int y0 = static_cast<int>(std::max(0.0, y_lo));
    const int y1 = static_cast<int>(std::min<double>(camera.height - 1, y_hi));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const Eigen::Vector2d d(x + 0.5 - p.mean.x(), y + 0.5 - p.mean.y());
        const double alpha = std::min(0.999, g.opacity * std::exp(-0.5 * d.dot(inv * d)));
        double& t = transmittance[static_cast<std::size_t>(y) * camera.width + x];
        const double w = alpha * t;
        for (int c = 0; c < 3; ++c) image.at(x, y, c) += w * g.color[c];
        t *= 1.0 - alpha;
      }
  }
  for (double& v : image.pixels) v = std::clamp(v, 0.0, 1.0);
  return image;
}

}  // namespace flowsplat
