#include "flowsplat/unroll.hpp"

#include <string>

#include "flowsplat/error.hpp"
#include "flowsplat/rotation.hpp"

namespace flowsplat {

BatchState BatchState::zeros(Eigen::Index n) {
  return {Eigen::Matrix3Xd::Zero(3, n), Eigen::Matrix4Xd::Zero(4, n), Eigen::Matrix3Xd::Zero(3, n)};
}

BatchState batch_from_cloud(const GaussianCloud& cloud) {
  const auto n = static_cast<Eigen::Index>(cloud.size());
  BatchState b = BatchState::zeros(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& g = cloud.gaussians[static_cast<std::size_t>(i)];
    b.position.col(i) = g.position;
    b.rotation.col(i) = rotation::to_vec(g.rotation);
    b.log_scale.col(i) = g.log_scale;
  }
  return b;
}

void write_batch(const BatchState& batch, GaussianCloud& cloud) {
  if (static_cast<Eigen::Index>(cloud.size()) != batch.size())
    throw ValidationError("write_batch: batch and cloud sizes differ");
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    auto& g = cloud.gaussians[static_cast<std::size_t>(i)];
    g.position = batch.position.col(i);
    g.rotation = rotation::from_vec(batch.rotation.col(i));
    g.log_scale = batch.log_scale.col(i);
  }
  cloud.refit_bounds();
}

UnrolledRollout::UnrolledRollout(const NeuralVelocityField& field, BatchState start, double t0)
    : field_(field), state_(std::move(start)), time_(t0) {}

void UnrolledRollout::step(double h) {
  Step s;
  s.t = time_;
  s.h = h;
  const double half = 0.5 * h;
  const Eigen::Matrix3Xd& p = state_.position;
  const Eigen::MatrixXd f1 = field_.forward(p, time_, &s.stages[0]);
  const Eigen::MatrixXd f2 =
      field_.forward(p + half * f1.topRows<3>(), time_ + half, &s.stages[1]);
  const Eigen::MatrixXd f3 =
      field_.forward(p + half * f2.topRows<3>(), time_ + half, &s.stages[2]);
  const Eigen::MatrixXd f4 = field_.forward(p + h * f3.topRows<3>(), time_ + h, &s.stages[3]);
  const Eigen::MatrixXd k = (f1 + 2.0 * f2 + 2.0 * f3 + f4) / 6.0;

  state_.position += h * k.topRows<3>();
  state_.log_scale += h * k.bottomRows<3>();
  s.omega = k.middleRows<3>(3);
  s.rotation_in = state_.rotation;
  const Eigen::Index n = state_.size();
  s.increment.resize(4, n);
  s.rotation_raw.resize(4, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const rotation::Vec4 e = rotation::to_vec(rotation::exp_map(h * s.omega.col(i)));
    const rotation::Vec4 u = rotation::left_matrix(e) * s.rotation_in.col(i);
    s.increment.col(i) = e;
    s.rotation_raw.col(i) = u;
    state_.rotation.col(i) = u / u.norm();
  }
  if (!state_.position.allFinite() || !state_.log_scale.allFinite() ||
      !state_.rotation.allFinite())
    throw NumericalError("unrolled rollout: non-finite state at step " +
                         std::to_string(steps_.size()));
  time_ += h;
  steps_.push_back(std::move(s));
}

const BatchState& UnrolledRollout::advance_to(double t, std::size_t steps) {
  if (steps == 0) throw ValidationError("advance_to: steps must be >= 1");
  const double t0 = time_;
  const double h = (t - t0) / static_cast<double>(steps);
  if (h == 0.0) throw ValidationError("advance_to: target equals current time");
  for (std::size_t k = 0; k < steps; ++k) {
    time_ = t0 + static_cast<double>(k) * h;
    step(h);
  }
  time_ = t;
  checkpoint_steps_.push_back(steps_.size());
  return state_;
}

BatchState UnrolledRollout::backward(const std::vector<BatchState>& adjoints,
                                     NeuralGradients& grads) const {
  if (adjoints.size() != checkpoint_steps_.size())
    throw ValidationError("unrolled backward: " + std::to_string(adjoints.size()) +
                          " adjoints for " + std::to_string(checkpoint_steps_.size()) +
                          " checkpoints");
  const Eigen::Index n = state_.size();
  for (const auto& a : adjoints)
    if (a.size() != n) throw ValidationError("unrolled backward: adjoint batch size mismatch");

  BatchState bar = BatchState::zeros(n);
  std::size_t next_checkpoint = checkpoint_steps_.size();
  for (std::size_t idx = steps_.size(); idx-- > 0;) {
    // Adjoints of checkpoints reached after step idx.
    while (next_checkpoint > 0 && checkpoint_steps_[next_checkpoint - 1] == idx + 1) {
      const BatchState& a = adjoints[--next_checkpoint];
      bar.position += a.position;
      bar.rotation += a.rotation;
      bar.log_scale += a.log_scale;
    }
    const Step& s = steps_[idx];
    const double h = s.h;
    const double half = 0.5 * h;

    Eigen::MatrixXd k_bar(kNeuralOutputs, n);
    k_bar.topRows<3>() = h * bar.position;
    k_bar.bottomRows<3>() = h * bar.log_scale;
    for (Eigen::Index i = 0; i < n; ++i) {
      const rotation::Vec4 u_bar =
          rotation::normalize_jacobian(s.rotation_raw.col(i)).transpose() * bar.rotation.col(i);
      const rotation::Vec4 e_bar =
          rotation::right_matrix(s.rotation_in.col(i)).transpose() * u_bar;
      bar.rotation.col(i) = rotation::left_matrix(s.increment.col(i)).transpose() * u_bar;
      k_bar.block<3, 1>(3, i) =
          h * (rotation::exp_jacobian(h * s.omega.col(i)).transpose() * e_bar);
    }

    Eigen::MatrixXd g = k_bar / 6.0;
    Eigen::Matrix3Xd d = field_.backward(s.stages[3], g, grads);
    bar.position += d;
    g = k_bar / 3.0;
    g.topRows<3>() += h * d;
    d = field_.backward(s.stages[2], g, grads);
    bar.position += d;
    g = k_bar / 3.0;
    g.topRows<3>() += half * d;
    d = field_.backward(s.stages[1], g, grads);
    bar.position += d;
    g = k_bar / 6.0;
    g.topRows<3>() += half * d;
    d = field_.backward(s.stages[0], g, grads);
    bar.position += d;
  }
  if (next_checkpoint != 0)
    throw ValidationError("unrolled backward: checkpoint bookkeeping mismatch");
  return bar;
}

}  // namespace flowsplat
