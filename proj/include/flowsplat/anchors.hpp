#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "flowsplat/rotation.hpp"
#include "flowsplat/scene.hpp"

namespace flowsplat {

struct Anchor {
  double time = 0.0;
  GaussianCloud cloud;
};

// Waypoint snapshots sorted by strictly increasing time, all with the same
// Gaussian count and ordering.
class AnchorSet {
 public:
  // Inserts a deep copy in time order. Throws ValidationError for a duplicate
  // time or a Gaussian count that differs from existing anchors.
  void snapshot(const GaussianCloud& cloud, double t);

  const std::vector<Anchor>& anchors() const { return anchors_; }
  std::size_t size() const { return anchors_.size(); }
  bool empty() const { return anchors_.empty(); }

  // Anchor with the largest time <= t. Throws ValidationError if none.
  const Anchor& nearest_past(double t) const;
  // Anchor with the smallest time >= t. Throws ValidationError if none.
  const Anchor& nearest_future(double t) const;

  nlohmann::json to_json() const;
  static AnchorSet from_json(const nlohmann::json& j);

 private:
  std::vector<Anchor> anchors_;
};

// Free-function spelling of AnchorSet::snapshot / nearest_past.
void snapshot(AnchorSet& set, const GaussianCloud& cloud, double t);
const Anchor& nearest_past_anchor(const AnchorSet& set, double t);

// Residual of one Gaussian against its anchor: [position difference,
// log(q * conj(q_anchor)), log_scale difference].
Eigen::Matrix<double, 9, 1> anchor_residual(const GaussianState& integrated,
                                            const GaussianState& anchor);

// Squared residual norm and its gradient w.r.t. the integrated position,
// quaternion (as a (w, x, y, z) 4-vector) and log_scale.
struct AnchorTermGradient {
  double value = 0.0;
  Eigen::Vector3d d_position = Eigen::Vector3d::Zero();
  rotation::Vec4 d_rotation = rotation::Vec4::Zero();
  Eigen::Vector3d d_log_scale = Eigen::Vector3d::Zero();
};
AnchorTermGradient anchor_term_gradient(const GaussianState& integrated,
                                        const GaussianState& anchor);

// Sum over anchors and Gaussians of |anchor_residual|^2. integrated[k] is the
// state obtained at stored[k].time. Throws ValidationError on shape mismatch.
double anchor_loss(std::span<const GaussianCloud> integrated, std::span<const Anchor> stored);

}  // namespace flowsplat
