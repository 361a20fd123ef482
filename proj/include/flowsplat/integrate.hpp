#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "flowsplat/anchors.hpp"
#include "flowsplat/fields.hpp"
#include "flowsplat/scene.hpp"

namespace flowsplat {

enum class Method { euler, rk4 };

std::string_view to_string(Method method);
std::optional<Method> method_from_string(std::string_view name);

struct IntegratorConfig {
  Method method = Method::rk4;
  // rollout(): number of uniform steps over [t0, t1].
  // anchor_aware_rollout() / rollout_through(): steps per unit time.
  int step_count = 100;
  int record_stride = 1;
};

void validate(const IntegratorConfig& config);

struct Trajectory {
  std::vector<double> times;
  std::vector<GaussianCloud> states;
  // Per-time auxiliary velocities; empty unless the field is second order.
  std::vector<std::vector<Eigen::Vector3d>> aux_velocities;

  std::vector<std::vector<Eigen::Vector3d>> positions() const;
};

struct StepResult {
  GaussianState state;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
};

// One explicit Euler step of size h (negative h integrates backward). The
// rotation advances by exp(h * omega) applied on the left, then renormalizes.
// Events are applied to the result. Throws NumericalError naming the step.
StepResult euler_step(const GaussianState& state, const Eigen::Vector3d& velocity, double t,
                      double h, const VelocityField& field, std::size_t gaussian_index = 0,
                      std::size_t step_index = 0);

// Classical RK4: stages k1..k4, combined as (k1 + 2 k2 + 2 k3 + k4) / 6 for
// position, log_scale, velocity and the angular-velocity tangent vector; the
// rotation is then advanced by exp(h * combined omega). Events once per step.
StepResult rk4_step(const GaussianState& state, const Eigen::Vector3d& velocity, double t,
                    double h, const VelocityField& field, std::size_t gaussian_index = 0,
                    std::size_t step_index = 0);

StepResult step(Method method, const GaussianState& state, const Eigen::Vector3d& velocity,
                double t, double h, const VelocityField& field, std::size_t gaussian_index,
                std::size_t step_index);

// Uniform steps h = (t1 - t0) / step_count; snapshots every record_stride
// steps plus both endpoints. Step k runs at time t0 + k * h.
Trajectory rollout(const GaussianCloud& cloud, double t0, double t1,
                   const IntegratorConfig& config, const VelocityField& field,
                   const std::vector<Eigen::Vector3d>* initial_velocities = nullptr);

// Steps needed to cover |span| at steps_per_unit resolution (at least 1).
std::size_t steps_for_span(double span, int steps_per_unit);

// Integrates from cloud.time through each of `times` in order (monotone, all
// on one side of cloud.time), recording a snapshot at each. Every interval
// uses uniform steps at config.step_count per unit time.
Trajectory rollout_through(const GaussianCloud& cloud, std::span<const double> times,
                           const IntegratorConfig& config, const VelocityField& field,
                           const std::vector<Eigen::Vector3d>* initial_velocities = nullptr);

enum class Direction { forward, backward };

// State at t integrated from the nearest past anchor (nearest future anchor
// for backward queries). An exact anchor time returns the stored snapshot.
// Uses ceil(|span| * step_count) uniform steps.
GaussianCloud anchor_aware_rollout(const AnchorSet& anchors, double t,
                                   const IntegratorConfig& config, const VelocityField& field,
                                   Direction direction = Direction::forward);

}  // namespace flowsplat
