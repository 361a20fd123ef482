#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "flowsplat/neural_field.hpp"
#include "flowsplat/scene.hpp"

namespace flowsplat {

// Column-per-Gaussian state of a batch. Rotations are (w, x, y, z) columns.
struct BatchState {
  Eigen::Matrix3Xd position;
  Eigen::Matrix4Xd rotation;
  Eigen::Matrix3Xd log_scale;

  Eigen::Index size() const { return position.cols(); }
  static BatchState zeros(Eigen::Index n);
};

BatchState batch_from_cloud(const GaussianCloud& cloud);
// Copies the batch state into `cloud` (which must have the same size).
void write_batch(const BatchState& batch, GaussianCloud& cloud);

// Differentiable fixed-step RK4 through a neural field. Every stage's
// activations are kept so backward() can return exact gradients of the
// discrete computation.
class UnrolledRollout {
 public:
  UnrolledRollout(const NeuralVelocityField& field, BatchState start, double t0);

  // Integrates from the current time to t in `steps` uniform steps and records
  // a checkpoint. Returns the state at t.
  const BatchState& advance_to(double t, std::size_t steps);

  const BatchState& state() const { return state_; }
  double time() const { return time_; }
  std::size_t checkpoint_count() const { return checkpoint_steps_.size(); }
  std::size_t step_count() const { return steps_.size(); }

  // Reverse pass. adjoints[k] is d loss / d (state at checkpoint k). Parameter
  // gradients are accumulated into `grads`; the adjoint of the start state is
  // returned. Throws ValidationError when the adjoints do not match the
  // recorded checkpoints.
  BatchState backward(const std::vector<BatchState>& adjoints, NeuralGradients& grads) const;

 private:
  struct Step {
    double t;
    double h;
    Eigen::Matrix4Xd rotation_in;  // q
    Eigen::Matrix4Xd increment;    // e = exp(h * omega)
    Eigen::Matrix4Xd rotation_raw;  // u = e * q before normalization
    Eigen::Matrix3Xd omega;        // combined angular velocity
    NeuralVelocityField::Cache stages[4];
  };

  void step(double h);

  const NeuralVelocityField& field_;
  BatchState state_;
  double time_;
  std::vector<Step> steps_;
  std::vector<std::size_t> checkpoint_steps_;  // step count at each checkpoint
};

}  // namespace flowsplat
