#include "flowsplat/synthetic.hpp"

#include <cmath>
#include <random>

#include "flowsplat/error.hpp"
#include "flowsplat/field_spec.hpp"
#include "flowsplat/integrate.hpp"

namespace flowsplat {

namespace {

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : gen_(seed) {}
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 gen_;
};

// Uniformly distributed unit quaternion from three uniforms (Shoemake).
Eigen::Quaterniond random_rotation(Sampler& s) {
  const double u1 = s.uniform();
  const double u2 = 2.0 * M_PI * s.uniform();
  const double u3 = 2.0 * M_PI * s.uniform();
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  return Eigen::Quaterniond(a * std::sin(u2), a * std::cos(u2), b * std::sin(u3), b * std::cos(u3))
      .normalized();
}

}  // namespace

SceneFile generate_scene(const SyntheticOptions& o) {
  if (o.gaussians < 1) throw ValidationError("generate: gaussians must be >= 1");
  if (o.frames < 2) throw ValidationError("generate: frames must be >= 2");
  if (o.gt_steps_per_unit < 1) throw ValidationError("generate: gt_steps_per_unit must be >= 1");

  nlohmann::json spec = {{"kind", o.kind}};
  if (o.kind != "zero") spec["params"] = o.params;
  spec["seed"] = o.seed;
  FieldPtr field = build_field(spec);
  const auto* analytic = dynamic_cast<const AnalyticField*>(field.get());
  const bool orbital = analytic && analytic->kind() == AnalyticKind::orbital;

  Sampler s(o.seed);
  SceneFile scene;
  scene.cloud.time = 0.0;
  for (std::size_t i = 0; i < o.gaussians; ++i) {
    GaussianState g;
    do {
      g.position = {s.uniform(), s.uniform(), s.uniform()};
    } while (orbital && (g.position - analytic->params().center).norm() < 0.15);
    g.rotation = random_rotation(s);
    for (int a = 0; a < 3; ++a) g.log_scale[a] = std::log(s.uniform(0.02, 0.04));
    g.color = {s.uniform(0.2, 1.0), s.uniform(0.2, 1.0), s.uniform(0.2, 1.0)};
    g.opacity = 0.9;
    scene.cloud.gaussians.push_back(g);
  }
  scene.cloud.bounds = bounding_box(scene.cloud);

  if (field->second_order()) {
    std::vector<Eigen::Vector3d> v(o.gaussians, Eigen::Vector3d::Zero());
    if (orbital) {
      const auto& p = analytic->params();
      for (std::size_t i = 0; i < o.gaussians; ++i) {
        const Eigen::Vector3d r = scene.cloud.gaussians[i].position - p.center;
        Eigen::Vector3d dir = Eigen::Vector3d::UnitZ().cross(r);
        if (dir.norm() < 1e-9 * r.norm()) dir = Eigen::Vector3d::UnitX().cross(r);
        v[i] = std::sqrt(p.gravity_constant / r.norm()) * dir.normalized();
      }
    }
    scene.velocities = v;
  }

  std::vector<double> times(o.frames);
  for (std::size_t f = 0; f < o.frames; ++f)
    times[f] = static_cast<double>(f) / static_cast<double>(o.frames - 1);
  IntegratorConfig config;
  config.method = Method::rk4;
  config.step_count = o.gt_steps_per_unit;
  const Trajectory traj = rollout_through(scene.cloud, times, config, *field,
                                          scene.velocities ? &*scene.velocities : nullptr);
  GroundTruth truth;
  truth.times = times;
  truth.positions = traj.positions();
  for (const auto& frame : truth.positions)
    for (const auto& p : frame) scene.cloud.bounds = scene.cloud.bounds.expanded(p);
  scene.truth = std::move(truth);
  scene.cameras.push_back(o.camera);
  scene.field = spec;
  return scene;
}

}  // namespace flowsplat
