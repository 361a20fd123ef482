#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "flowsplat/fields.hpp"

namespace flowsplat {

enum class AnalyticKind {
  gravity_bounce,
  drift,
  spin,
  swirl,
  diffusion_gas,
  vortex,
  wave,
  wind_curl,
  orbital,
  reaction_diffusion,
};

std::string_view to_string(AnalyticKind kind);
std::optional<AnalyticKind> analytic_kind_from_string(std::string_view name);

// Kind-specific constants. Only the members a kind reads matter for it.
struct AnalyticParams {
  // gravity_bounce
  double g = -9.8;
  double z0 = 0.0;
  double gamma = 0.8;
  // drift
  Eigen::Vector3d delta{0.3, 0.0, 0.0};
  // spin, orbital
  Eigen::Vector3d center{0.5, 0.5, 0.5};
  // spin, vortex
  double omega = 2.0 * M_PI;
  // swirl (eta is the noise amplitude); wind_curl reuses eta and c
  double s0 = 0.5;
  double s1 = 0.5;
  double eta = 0.0;
  // diffusion_gas
  double sigma = 0.1;
  Eigen::Vector3d drift = Eigen::Vector3d::Zero();
  // vortex
  double k = 0.1;
  double u0 = 0.5;
  // wave
  double amplitude = 0.2;
  double frequency = 1.0;
  double c = 1.0;
  // wind_curl
  double wind = 0.2;
  // orbital
  double gravity_constant = 1.0;
  double mu = 0.0;
  // reaction_diffusion
  double noise_scale = 1.0;

  std::uint64_t seed = 0;
};

// Throws ValidationError when params are invalid for kind.
void validate(AnalyticKind kind, const AnalyticParams& params);

// The closed-form motion fields used for injection and synthetic scenes.
// gravity_bounce, orbital, diffusion_gas and reaction_diffusion are second
// order: d_position equals the carried velocity and d_velocity holds the
// acceleration.
class AnalyticField final : public VelocityField {
 public:
  AnalyticField(AnalyticKind kind, AnalyticParams params);

  AnalyticKind kind() const { return kind_; }
  const AnalyticParams& params() const { return params_; }

  StateDerivative evaluate(const FieldQuery& query) const override;
  void apply_events(GaussianState& state, Eigen::Vector3d& velocity) const override;
  bool second_order() const override;

  StateDerivative at(const Eigen::Vector3d& position, const Eigen::Vector3d& velocity, double t,
                     std::size_t gaussian_index = 0, std::size_t step_index = 0) const;

 private:
  AnalyticKind kind_;
  AnalyticParams params_;
};

StateDerivative analytic_eval(const AnalyticField& field, const Eigen::Vector3d& position,
                              const Eigen::Vector3d& velocity, double t);

bool is_second_order(AnalyticKind kind);

}  // namespace flowsplat
