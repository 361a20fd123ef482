#include "flowsplat/integrate.hpp"

#include <cmath>
#include <string>

#include "flowsplat/error.hpp"
#include "flowsplat/rotation.hpp"

namespace flowsplat {

namespace {

std::string where(std::size_t gaussian, std::size_t step) {
  return "gaussian " + std::to_string(gaussian) + ", step " + std::to_string(step);
}

StateDerivative eval_checked(const VelocityField& field, const GaussianState& s,
                             const Eigen::Vector3d& v, double t, std::size_t gaussian,
                             std::size_t step, const char* stage) {
  StateDerivative d = field.evaluate(FieldQuery{s, v, t, gaussian, step});
  if (!d.all_finite())
    throw NumericalError(std::string("non-finite derivative at stage ") + stage + " (" +
                         where(gaussian, step) + ")");
  return d;
}

StepResult offset(const GaussianState& s, const Eigen::Vector3d& v, const StateDerivative& d,
                  double a) {
  StepResult out{s, v};
  out.state.position = s.position + a * d.d_position;
  out.state.rotation = rotation::advance(s.rotation, a * d.d_rotation);
  out.state.log_scale = s.log_scale + a * d.d_log_scale;
  if (d.d_velocity) out.velocity = v + a * *d.d_velocity;
  return out;
}

void finish(StepResult& r, const VelocityField& field, std::size_t gaussian, std::size_t step) {
  field.apply_events(r.state, r.velocity);
  if (!r.state.position.allFinite() || !r.state.log_scale.allFinite() ||
      !r.state.rotation.coeffs().allFinite() || !r.velocity.allFinite())
    throw NumericalError("integration produced a non-finite state (" + where(gaussian, step) + ")");
}

}  // namespace

std::string_view to_string(Method method) { return method == Method::euler ? "euler" : "rk4"; }

std::optional<Method> method_from_string(std::string_view name) {
  if (name == "euler") return Method::euler;
  if (name == "rk4") return Method::rk4;
  return std::nullopt;
}

void validate(const IntegratorConfig& config) {
  if (config.step_count < 1) throw ValidationError("integrator: step_count must be >= 1");
  if (config.record_stride < 1) throw ValidationError("integrator: record_stride must be >= 1");
}

std::vector<std::vector<Eigen::Vector3d>> Trajectory::positions() const {
  std::vector<std::vector<Eigen::Vector3d>> out;
  out.reserve(states.size());
  for (const auto& cloud : states) {
    std::vector<Eigen::Vector3d> row;
    row.reserve(cloud.size());
    for (const auto& g : cloud.gaussians) row.push_back(g.position);
    out.push_back(std::move(row));
  }
  return out;
}

StepResult euler_step(const GaussianState& state, const Eigen::Vector3d& velocity, double t,
                      double h, const VelocityField& field, std::size_t gaussian_index,
                      std::size_t step_index) {
  if (h == 0.0) throw ValidationError("euler_step: step size must be nonzero");
  const StateDerivative k1 = eval_checked(field, state, velocity, t, gaussian_index, step_index, "k1");
  StepResult r = offset(state, velocity, k1, h);
  finish(r, field, gaussian_index, step_index);
  return r;
}

StepResult rk4_step(const GaussianState& state, const Eigen::Vector3d& velocity, double t,
                    double h, const VelocityField& field, std::size_t gaussian_index,
                    std::size_t step_index) {
  if (h == 0.0) throw ValidationError("rk4_step: step size must be nonzero");
  const double half = 0.5 * h;
  const StateDerivative k1 = eval_checked(field, state, velocity, t, gaussian_index, step_index, "k1");
  const StepResult s2 = offset(state, velocity, k1, half);
  const StateDerivative k2 =
      eval_checked(field, s2.state, s2.velocity, t + half, gaussian_index, step_index, "k2");
  const StepResult s3 = offset(state, velocity, k2, half);
  const StateDerivative k3 =
      eval_checked(field, s3.state, s3.velocity, t + half, gaussian_index, step_index, "k3");
  const StepResult s4 = offset(state, velocity, k3, h);
  const StateDerivative k4 =
      eval_checked(field, s4.state, s4.velocity, t + h, gaussian_index, step_index, "k4");

  StateDerivative k;
  k.d_position = (k1.d_position + 2.0 * k2.d_position + 2.0 * k3.d_position + k4.d_position) / 6.0;
  k.d_rotation = (k1.d_rotation + 2.0 * k2.d_rotation + 2.0 * k3.d_rotation + k4.d_rotation) / 6.0;
  k.d_log_scale =
      (k1.d_log_scale + 2.0 * k2.d_log_scale + 2.0 * k3.d_log_scale + k4.d_log_scale) / 6.0;
  if (k1.d_velocity || k2.d_velocity || k3.d_velocity || k4.d_velocity) {
    const Eigen::Vector3d z = Eigen::Vector3d::Zero();
    k.d_velocity = (k1.d_velocity.value_or(z) + 2.0 * k2.d_velocity.value_or(z) +
                    2.0 * k3.d_velocity.value_or(z) + k4.d_velocity.value_or(z)) /
                   6.0;
  }
  StepResult r = offset(state, velocity, k, h);
  finish(r, field, gaussian_index, step_index);
  return r;
}

StepResult step(Method method, const GaussianState& state, const Eigen::Vector3d& velocity,
                double t, double h, const VelocityField& field, std::size_t gaussian_index,
                std::size_t step_index) {
  return method == Method::euler
             ? euler_step(state, velocity, t, h, field, gaussian_index, step_index)
             : rk4_step(state, velocity, t, h, field, gaussian_index, step_index);
}

namespace {

// Advances every Gaussian by one step in place.
void step_cloud(GaussianCloud& cloud, std::vector<Eigen::Vector3d>& velocities, double t, double h,
                Method method, const VelocityField& field, std::size_t step_index) {
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    StepResult r = step(method, cloud.gaussians[i], velocities[i], t, h, field, i, step_index);
    cloud.gaussians[i] = r.state;
    velocities[i] = r.velocity;
  }
}

void record(Trajectory& traj, GaussianCloud cloud, double t,
            const std::vector<Eigen::Vector3d>& velocities, bool second_order) {
  cloud.time = t;
  cloud.refit_bounds();
  traj.times.push_back(t);
  traj.states.push_back(std::move(cloud));
  if (second_order) traj.aux_velocities.push_back(velocities);
}

std::vector<Eigen::Vector3d> initial_velocity(const GaussianCloud& cloud,
                                              const std::vector<Eigen::Vector3d>* given) {
  if (!given) return std::vector<Eigen::Vector3d>(cloud.size(), Eigen::Vector3d::Zero());
  if (given->size() != cloud.size())
    throw ValidationError("initial velocities do not match the cloud size");
  return *given;
}

}  // namespace

Trajectory rollout(const GaussianCloud& cloud, double t0, double t1,
                   const IntegratorConfig& config, const VelocityField& field,
                   const std::vector<Eigen::Vector3d>* initial_velocities) {
  validate(config);
  if (!(t0 != t1) || !std::isfinite(t0) || !std::isfinite(t1))
    throw ValidationError("rollout: t0 and t1 must be finite and distinct");
  const bool second = field.second_order();
  const std::size_t n = static_cast<std::size_t>(config.step_count);
  const double h = (t1 - t0) / static_cast<double>(n);

  GaussianCloud state = cloud;
  std::vector<Eigen::Vector3d> velocities = initial_velocity(cloud, initial_velocities);
  Trajectory traj;
  record(traj, state, t0, velocities, second);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = t0 + static_cast<double>(k) * h;
    step_cloud(state, velocities, t, h, config.method, field, k);
    const std::size_t done = k + 1;
    if (done == n)
      record(traj, state, t1, velocities, second);
    else if (done % static_cast<std::size_t>(config.record_stride) == 0)
      record(traj, state, t0 + static_cast<double>(done) * h, velocities, second);
  }
  return traj;
}

std::size_t steps_for_span(double span, int steps_per_unit) {
  const double raw = std::abs(span) * steps_per_unit;
  const double n = std::ceil(raw - 1e-9 * std::max(1.0, raw));
  return static_cast<std::size_t>(std::max(1.0, n));
}

Trajectory rollout_through(const GaussianCloud& cloud, std::span<const double> times,
                           const IntegratorConfig& config, const VelocityField& field,
                           const std::vector<Eigen::Vector3d>* initial_velocities) {
  validate(config);
  const bool second = field.second_order();
  GaussianCloud state = cloud;
  std::vector<Eigen::Vector3d> velocities = initial_velocity(cloud, initial_velocities);
  Trajectory traj;
  double t_prev = cloud.time;
  std::size_t step_index = 0;
  double sign = 0.0;
  for (double target : times) {
    if (target == t_prev) {
      record(traj, state, target, velocities, second);
      continue;
    }
    const double s = target > t_prev ? 1.0 : -1.0;
    if (sign != 0.0 && s != sign)
      throw ValidationError("rollout_through: target times must be monotone");
    sign = s;
    const std::size_t n = steps_for_span(target - t_prev, config.step_count);
    const double h = (target - t_prev) / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k)
      step_cloud(state, velocities, t_prev + static_cast<double>(k) * h, h, config.method, field,
                 step_index++);
    record(traj, state, target, velocities, second);
    t_prev = target;
  }
  return traj;
}

GaussianCloud anchor_aware_rollout(const AnchorSet& anchors, double t,
                                   const IntegratorConfig& config, const VelocityField& field,
                                   Direction direction) {
  validate(config);
  if (anchors.empty()) throw ValidationError("anchor_aware_rollout: no anchors");
  const Anchor& a = direction == Direction::forward ? anchors.nearest_past(t)
                                                    : anchors.nearest_future(t);
  if (a.time == t) return a.cloud;
  GaussianCloud start = a.cloud;
  start.time = a.time;
  IntegratorConfig span_config = config;
  span_config.step_count = static_cast<int>(steps_for_span(t - a.time, config.step_count));
  Trajectory traj = rollout(start, a.time, t, span_config, field);
  return traj.states.back();
}

}  // namespace flowsplat
