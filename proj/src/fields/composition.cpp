#include "flowsplat/composition.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flowsplat/error.hpp"

namespace flowsplat {

bool StateDerivative::all_finite() const {
  return d_position.allFinite() && d_rotation.allFinite() && d_log_scale.allFinite() &&
         (!d_velocity || d_velocity->allFinite());
}

StateDerivative linear_combination(double wa, const StateDerivative& a, double wb,
                                   const StateDerivative& b) {
  StateDerivative out;
  out.d_position = wa * a.d_position + wb * b.d_position;
  out.d_rotation = wa * a.d_rotation + wb * b.d_rotation;
  out.d_log_scale = wa * a.d_log_scale + wb * b.d_log_scale;
  if (a.d_velocity || b.d_velocity) {
    const Eigen::Vector3d va = a.d_velocity.value_or(Eigen::Vector3d::Zero());
    const Eigen::Vector3d vb = b.d_velocity.value_or(Eigen::Vector3d::Zero());
    out.d_velocity = wa * va + wb * vb;
  }
  return out;
}

namespace {

double smoothstep01(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

// 1 inside, 0 outside, smooth across a band of width `edge` around d = 0.
double inside_weight(double signed_distance, double edge) {
  if (edge <= 0.0) return signed_distance <= 0.0 ? 1.0 : 0.0;
  return 1.0 - smoothstep01(signed_distance / edge + 0.5);
}

}  // namespace

double GeometricMask::operator()(const Eigen::Vector3d& x) const {
  double w = 0.0;
  switch (shape) {
    case Shape::constant:
      w = value;
      break;
    case Shape::sphere:
      w = inside_weight((x - center).norm() - radius, edge);
      break;
    case Shape::box: {
      // Signed distance to the box surface (negative inside).
      const Eigen::Vector3d c = 0.5 * (min + max), half = 0.5 * (max - min);
      const Eigen::Vector3d q = (x - c).cwiseAbs() - half;
      const double outside = q.cwiseMax(0.0).norm();
      const double inside = std::min(q.maxCoeff(), 0.0);
      w = inside_weight(outside + inside, edge);
      break;
    }
  }
  return invert ? 1.0 - w : w;
}

AddField::AddField(FieldPtr base, FieldPtr ext, double lambda)
    : base_(std::move(base)), ext_(std::move(ext)), lambda_(lambda) {
  if (!base_ || !ext_) throw ValidationError("compose_add: null field");
  if (!std::isfinite(lambda_)) throw ValidationError("compose_add: lambda must be finite");
}

StateDerivative AddField::evaluate(const FieldQuery& q) const {
  const StateDerivative b = base_->evaluate(q);
  if (lambda_ == 0.0) return b;
  return linear_combination(1.0, b, lambda_, ext_->evaluate(q));
}

void AddField::apply_events(GaussianState& state, Eigen::Vector3d& velocity) const {
  base_->apply_events(state, velocity);
  if (lambda_ != 0.0) ext_->apply_events(state, velocity);
}

bool AddField::second_order() const { return base_->second_order() || ext_->second_order(); }

BlendField::BlendField(FieldPtr base, FieldPtr injected, MaskFunction mask)
    : base_(std::move(base)), injected_(std::move(injected)), mask_(std::move(mask)) {
  if (!base_ || !injected_ || !mask_) throw ValidationError("blend_masked: null argument");
}

double BlendField::weight(const Eigen::Vector3d& x) const {
  const double w = mask_(x);
  if (!(w >= 0.0 && w <= 1.0))
    throw ValidationError("blend_masked: mask value " + std::to_string(w) + " outside [0,1]");
  return w;
}

StateDerivative BlendField::evaluate(const FieldQuery& q) const {
  const double w = weight(q.state.position);
  if (w == 0.0) return base_->evaluate(q);
  if (w == 1.0) return injected_->evaluate(q);
  return linear_combination(w, injected_->evaluate(q), 1.0 - w, base_->evaluate(q));
}

void BlendField::apply_events(GaussianState& state, Eigen::Vector3d& velocity) const {
  const double w = weight(state.position);
  if (w < 1.0) base_->apply_events(state, velocity);
  if (w > 0.0) injected_->apply_events(state, velocity);
}

bool BlendField::second_order() const {
  return base_->second_order() || injected_->second_order();
}

FieldPtr compose_add(FieldPtr base, FieldPtr ext, double lambda) {
  return std::make_shared<AddField>(std::move(base), std::move(ext), lambda);
}

FieldPtr blend_masked(FieldPtr base, FieldPtr injected, MaskFunction mask) {
  return std::make_shared<BlendField>(std::move(base), std::move(injected), std::move(mask));
}

}  // namespace flowsplat
