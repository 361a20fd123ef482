#pragma once

#include <cstddef>
#include <memory>
#include <optional>

#include <Eigen/Core>

#include "flowsplat/scene.hpp"

namespace flowsplat {

// Time derivative of one Gaussian's state. Color and opacity never change.
// d_velocity is the acceleration of second-order fields; first-order fields
// leave it empty.
struct StateDerivative {
  Eigen::Vector3d d_position = Eigen::Vector3d::Zero();
  Eigen::Vector3d d_rotation = Eigen::Vector3d::Zero();  // world-frame angular velocity
  Eigen::Vector3d d_log_scale = Eigen::Vector3d::Zero();
  std::optional<Eigen::Vector3d> d_velocity;

  bool all_finite() const;
};

// wa * a + wb * b componentwise; a missing d_velocity counts as zero.
StateDerivative linear_combination(double wa, const StateDerivative& a, double wb,
                                   const StateDerivative& b);

struct FieldQuery {
  const GaussianState& state;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  // auxiliary velocity of second-order fields
  double t = 0.0;
  std::size_t gaussian_index = 0;
  std::size_t step_index = 0;  // keys the counter-based noise of stochastic fields
};

// The dynamical law. Evaluation must be pure: stochastic fields derive their
// noise from (seed, gaussian_index, step_index) only.
class VelocityField {
 public:
  virtual ~VelocityField() = default;

  virtual StateDerivative evaluate(const FieldQuery& query) const = 0;

  // Applied once after every accepted integration step.
  virtual void apply_events(GaussianState& /*state*/, Eigen::Vector3d& /*velocity*/) const {}

  // True when evaluate() fills d_velocity and rollouts must carry velocities.
  virtual bool second_order() const { return false; }
};

using FieldPtr = std::shared_ptr<const VelocityField>;

class ZeroField final : public VelocityField {
 public:
  StateDerivative evaluate(const FieldQuery&) const override { return {}; }
};

}  // namespace flowsplat
