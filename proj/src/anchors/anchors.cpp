#include "flowsplat/anchors.hpp"

#include <algorithm>
#include <string>

#include "flowsplat/error.hpp"
#include "flowsplat/scene_io.hpp"

namespace flowsplat {

void AnchorSet::snapshot(const GaussianCloud& cloud, double t) {
  if (!std::isfinite(t)) throw ValidationError("anchor time must be finite");
  if (!anchors_.empty() && cloud.size() != anchors_.front().cloud.size())
    throw ValidationError("anchor at t=" + std::to_string(t) + " has " +
                          std::to_string(cloud.size()) + " Gaussians, expected " +
                          std::to_string(anchors_.front().cloud.size()));
  auto pos = std::lower_bound(anchors_.begin(), anchors_.end(), t,
                              [](const Anchor& a, double v) { return a.time < v; });
  if (pos != anchors_.end() && pos->time == t)
    throw ValidationError("duplicate anchor time " + std::to_string(t));
  Anchor a{t, cloud};
  a.cloud.time = t;
  anchors_.insert(pos, std::move(a));
}

const Anchor& AnchorSet::nearest_past(double t) const {
  auto pos = std::upper_bound(anchors_.begin(), anchors_.end(), t,
                              [](double v, const Anchor& a) { return v < a.time; });
  if (pos == anchors_.begin())
    throw ValidationError("no anchor at or before t=" + std::to_string(t));
  return *std::prev(pos);
}

const Anchor& AnchorSet::nearest_future(double t) const {
  auto pos = std::lower_bound(anchors_.begin(), anchors_.end(), t,
                              [](const Anchor& a, double v) { return a.time < v; });
  if (pos == anchors_.end()) throw ValidationError("no anchor at or after t=" + std::to_string(t));
  return *pos;
}

nlohmann::json AnchorSet::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& a : anchors_) {
    nlohmann::json gs = nlohmann::json::array();
    for (const auto& g : a.cloud.gaussians) gs.push_back(gaussian_to_json(g));
    arr.push_back({{"time", a.time}, {"gaussians", std::move(gs)}});
  }
  return arr;
}

AnchorSet AnchorSet::from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ParseError("anchors: expected an array");
  AnchorSet set;
  for (std::size_t k = 0; k < j.size(); ++k) {
    const std::string where = "anchors[" + std::to_string(k) + "]";
    if (!j[k].contains("time") || !j[k]["time"].is_number())
      throw ParseError(where + ".time: expected a number");
    GaussianCloud cloud;
    const auto& gs = j[k].at("gaussians");
    for (std::size_t i = 0; i < gs.size(); ++i) {
      cloud.gaussians.push_back(
          gaussian_from_json(gs[i], where + ".gaussians[" + std::to_string(i) + "]"));
      validate(cloud.gaussians.back(), i);
    }
    cloud.bounds = bounding_box(cloud);
    set.snapshot(cloud, j[k]["time"].get<double>());
  }
  return set;
}

void snapshot(AnchorSet& set, const GaussianCloud& cloud, double t) { set.snapshot(cloud, t); }

const Anchor& nearest_past_anchor(const AnchorSet& set, double t) { return set.nearest_past(t); }

Eigen::Matrix<double, 9, 1> anchor_residual(const GaussianState& integrated,
                                            const GaussianState& anchor) {
  Eigen::Matrix<double, 9, 1> r;
  r.head<3>() = integrated.position - anchor.position;
  r.segment<3>(3) = rotation::log_map(integrated.rotation * anchor.rotation.conjugate());
  r.tail<3>() = integrated.log_scale - anchor.log_scale;
  return r;
}

AnchorTermGradient anchor_term_gradient(const GaussianState& integrated,
                                        const GaussianState& anchor) {
  using namespace rotation;
  const Eigen::Quaterniond rel = integrated.rotation * anchor.rotation.conjugate();
  const Eigen::Matrix<double, 9, 1> r = anchor_residual(integrated, anchor);
  AnchorTermGradient out;
  out.value = r.squaredNorm();
  out.d_position = 2.0 * r.head<3>();
  out.d_log_scale = 2.0 * r.tail<3>();
  const Mat4 d_rel_d_q = right_matrix(to_vec(anchor.rotation.conjugate()));
  out.d_rotation = d_rel_d_q.transpose() * (log_jacobian(to_vec(rel)).transpose() *
                                            (2.0 * r.segment<3>(3)));
  return out;
}

double anchor_loss(std::span<const GaussianCloud> integrated, std::span<const Anchor> stored) {
  if (integrated.size() != stored.size())
    throw ValidationError("anchor_loss: " + std::to_string(integrated.size()) +
                          " integrated states for " + std::to_string(stored.size()) + " anchors");
  double total = 0.0;
  for (std::size_t k = 0; k < stored.size(); ++k) {
    const auto& a = stored[k].cloud;
    const auto& x = integrated[k];
    if (a.size() != x.size())
      throw ValidationError("anchor_loss: Gaussian count mismatch at anchor " + std::to_string(k));
    for (std::size_t i = 0; i < a.size(); ++i)
      total += anchor_residual(x.gaussians[i], a.gaussians[i]).squaredNorm();
  }
  return total;
}

}  // namespace flowsplat
