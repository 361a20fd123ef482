#pragma once

#include <functional>

#include <Eigen/Core>

#include "flowsplat/fields.hpp"

namespace flowsplat {

// Spatial weight in [0, 1]; 1 selects the injected field.
using MaskFunction = std::function<double(const Eigen::Vector3d&)>;

// Geometric mask: constant, sphere or axis-aligned box, with an optional soft
// edge of width `edge` centred on the boundary (smoothstep profile).
struct GeometricMask {
  enum class Shape { constant, sphere, box };

  Shape shape = Shape::constant;
  double value = 1.0;  // constant shape only
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 1.0;
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Ones();
  double edge = 0.0;
  bool invert = false;

  double operator()(const Eigen::Vector3d& x) const;
};

// base + lambda * ext on every derivative component.
class AddField final : public VelocityField {
 public:
  AddField(FieldPtr base, FieldPtr ext, double lambda);

  StateDerivative evaluate(const FieldQuery& query) const override;
  void apply_events(GaussianState& state, Eigen::Vector3d& velocity) const override;
  bool second_order() const override;

 private:
  FieldPtr base_, ext_;
  double lambda_;
};

// mask(x) * injected + (1 - mask(x)) * base. Throws ValidationError if the mask
// leaves [0, 1].
class BlendField final : public VelocityField {
 public:
  BlendField(FieldPtr base, FieldPtr injected, MaskFunction mask);

  StateDerivative evaluate(const FieldQuery& query) const override;
  void apply_events(GaussianState& state, Eigen::Vector3d& velocity) const override;
  bool second_order() const override;

 private:
  double weight(const Eigen::Vector3d& x) const;

  FieldPtr base_, injected_;
  MaskFunction mask_;
};

FieldPtr compose_add(FieldPtr base, FieldPtr ext, double lambda);
FieldPtr blend_masked(FieldPtr base, FieldPtr injected, MaskFunction mask);

}  // namespace flowsplat
