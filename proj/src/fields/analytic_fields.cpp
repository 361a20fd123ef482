#include "flowsplat/analytic_fields.hpp"

#include <array>
#include <cmath>

#include "flowsplat/error.hpp"
#include "flowsplat/noise.hpp"

namespace flowsplat {

namespace {

constexpr std::array<std::string_view, 10> kNames = {
    "gravity_bounce", "drift",     "spin",      "swirl",   "diffusion_gas",
    "vortex",         "wave",      "wind_curl", "orbital", "reaction_diffusion"};

bool finite(double v) { return std::isfinite(v); }

}  // namespace

std::string_view to_string(AnalyticKind kind) { return kNames[static_cast<std::size_t>(kind)]; }

std::optional<AnalyticKind> analytic_kind_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (kNames[i] == name) return static_cast<AnalyticKind>(i);
  return std::nullopt;
}

bool is_second_order(AnalyticKind kind) {
  switch (kind) {
    case AnalyticKind::gravity_bounce:
    case AnalyticKind::orbital:
    case AnalyticKind::diffusion_gas:
    case AnalyticKind::reaction_diffusion:
      return true;
    default:
      return false;
  }
}

void validate(AnalyticKind kind, const AnalyticParams& p) {
  const std::string name(to_string(kind));
  auto require = [&](bool ok, const char* what) {
    if (!ok) throw ValidationError(name + ": " + what);
  };
  switch (kind) {
    case AnalyticKind::gravity_bounce:
      require(finite(p.g) && finite(p.z0), "g and z0 must be finite");
      require(p.gamma > 0.0 && p.gamma < 1.0, "gamma must lie in (0,1)");
      break;
    case AnalyticKind::drift:
      require(p.delta.allFinite(), "delta must be finite");
      break;
    case AnalyticKind::spin:
      require(p.center.allFinite() && finite(p.omega), "center and omega must be finite");
      break;
    case AnalyticKind::swirl:
      require(finite(p.s0) && finite(p.s1) && finite(p.eta) && p.eta >= 0.0,
              "s0, s1 must be finite and eta >= 0");
      break;
    case AnalyticKind::diffusion_gas:
      require(finite(p.sigma) && p.sigma >= 0.0 && p.drift.allFinite(),
              "sigma must be >= 0 and drift finite");
      break;
    case AnalyticKind::vortex:
      require(finite(p.omega) && finite(p.k) && finite(p.u0), "omega, k, u0 must be finite");
      break;
    case AnalyticKind::wave:
      require(finite(p.amplitude) && finite(p.frequency) && finite(p.c),
              "A, f, c must be finite");
      break;
    case AnalyticKind::wind_curl:
      require(finite(p.wind) && finite(p.c) && finite(p.eta), "w, c, eta must be finite");
      break;
    case AnalyticKind::orbital:
      require(p.center.allFinite() && finite(p.gravity_constant) && finite(p.mu),
              "center, G, mu must be finite");
      break;
    case AnalyticKind::reaction_diffusion:
      require(finite(p.noise_scale) && p.noise_scale >= 0.0, "noise_scale must be >= 0");
      break;
  }
}

AnalyticField::AnalyticField(AnalyticKind kind, AnalyticParams params)
    : kind_(kind), params_(std::move(params)) {
  validate(kind_, params_);
}

bool AnalyticField::second_order() const { return is_second_order(kind_); }

StateDerivative AnalyticField::at(const Eigen::Vector3d& x, const Eigen::Vector3d& v, double t,
                                  std::size_t gaussian_index, std::size_t step_index) const {
  const AnalyticParams& p = params_;
  auto eta = [&](std::uint64_t component) {
    return noise::normal(p.seed, gaussian_index, step_index, component);
  };
  StateDerivative d;
  switch (kind_) {
    case AnalyticKind::gravity_bounce:
      d.d_position = v;
      d.d_velocity = Eigen::Vector3d(0.0, 0.0, p.g);
      break;
    case AnalyticKind::drift:
      d.d_position = p.delta;
      break;
    case AnalyticKind::spin:
      d.d_position = p.omega * Eigen::Vector3d(-(x.y() - p.center.y()), x.x() - p.center.x(), 0.0);
      break;
    case AnalyticKind::swirl:
      d.d_position.x() = p.s0 * std::cos(2.5 * x.y() + 1.5 * t);
      d.d_position.y() =
          p.s1 * std::sin(3.0 * x.x() + 2.0 * t) * std::cos(2.5 * x.z() - 1.5 * t) + p.eta * eta(1);
      d.d_position.z() =
          p.s1 * std::cos(3.0 * x.x() - 2.5 * t) * std::sin(3.0 * x.y() + 2.5 * t) + p.eta * eta(2);
      break;
    case AnalyticKind::diffusion_gas: {
      // v <- 0.97 v + 0.03 N(0, sigma^2 I) + d, read as a rate per unit time.
      const Eigen::Vector3d xi(eta(0), eta(1), eta(2));
      d.d_position = v;
      d.d_velocity = -0.03 * v + 0.03 * p.sigma * xi + p.drift;
      break;
    }
    case AnalyticKind::vortex: {
      const double r = std::hypot(x.x(), x.y());
      const double theta = std::atan2(x.y(), x.x());
      d.d_position.x() = -p.omega * r * std::sin(theta) - p.k * x.x();
      d.d_position.y() = p.omega * r * std::cos(theta) - p.k * x.y();
      d.d_position.z() = p.u0 * std::exp(-r * r);
      break;
    }
    case AnalyticKind::wave: {
      const double two_pi_f = 2.0 * M_PI * p.frequency;
      d.d_position.x() = 0.0;
      d.d_position.y() = p.amplitude * std::sin(two_pi_f * (x.x() - p.c * t));
      d.d_position.z() = p.amplitude * std::cos(two_pi_f * (x.y() - p.c * t));
      break;
    }
    case AnalyticKind::wind_curl:
      d.d_position.x() = p.wind + p.c * std::sin(2.0 * x.y() + t);
      d.d_position.y() = p.c * std::cos(2.0 * x.x() - 0.5 * t);
      d.d_position.z() = p.eta * std::sin(3.0 * x.z() + 2.0 * t);
      break;
    case AnalyticKind::orbital: {
      const Eigen::Vector3d r = x - p.center;
      const double n = r.norm();
      if (n == 0.0) throw NumericalError("orbital field evaluated at its center");
      d.d_position = v;
      d.d_velocity = -p.gravity_constant * r / (n * n * n) - p.mu * v;
      break;
    }
    case AnalyticKind::reaction_diffusion: {
      // v <- 0.9 v + 0.1 N(0, I) plus the sinusoidal kicks, read as a rate.
      const Eigen::Vector3d xi(eta(0), eta(1), eta(2));
      const Eigen::Vector3d kick(0.2 * std::sin(3.0 * x.y() + t), 0.2 * std::sin(3.0 * x.z() - t),
                                 0.2 * std::sin(3.0 * x.x() + t));
      d.d_position = v;
      d.d_velocity = -0.1 * v + 0.1 * p.noise_scale * xi + kick;
      break;
    }
  }
  return d;
}

StateDerivative AnalyticField::evaluate(const FieldQuery& q) const {
  return at(q.state.position, q.velocity, q.t, q.gaussian_index, q.step_index);
}

void AnalyticField::apply_events(GaussianState& state, Eigen::Vector3d& velocity) const {
  if (kind_ != AnalyticKind::gravity_bounce) return;
  if (state.position.z() < params_.z0) {
    state.position.z() = params_.z0;
    velocity.z() = -params_.gamma * velocity.z();
  }
}

StateDerivative analytic_eval(const AnalyticField& field, const Eigen::Vector3d& position,
                              const Eigen::Vector3d& velocity, double t) {
  return field.at(position, velocity, t);
}

}  // namespace flowsplat
