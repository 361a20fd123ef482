// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "flowsplat/analytic_fields.hpp"
#include "flowsplat/anchors.hpp"
#include "flowsplat/commands.hpp"
#include "flowsplat/composition.hpp"
#include "flowsplat/integrate.hpp"
#include "flowsplat/knn.hpp"
#include "flowsplat/losses.hpp"
#include "flowsplat/manifest.hpp"
#include "flowsplat/metrics.hpp"
#include "flowsplat/render.hpp"
#include "flowsplat/scene_io.hpp"
#include "flowsplat/synthetic.hpp"
#include "flowsplat/train.hpp"
#include "support.hpp"

using namespace flowsplat;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* fmt, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, fmt, a);
  return buf;
}

std::string sci(double v) { return format("%.3g", v); }

AnalyticField analytic(AnalyticKind kind, AnalyticParams p = {}) { return AnalyticField(kind, p); }

double max_position_error(const GaussianCloud& a, const GaussianCloud& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    e = std::max(e, (a.gaussians[i].position - b.gaussians[i].position).norm());
  return e;
}

bool bitwise_equal(const Trajectory& a, const Trajectory& b) {
  if (a.times != b.times || a.states.size() != b.states.size()) return false;
  for (std::size_t k = 0; k < a.states.size(); ++k)
    for (std::size_t i = 0; i < a.states[k].size(); ++i) {
      const GaussianState& x = a.states[k].gaussians[i];
      const GaussianState& y = b.states[k].gaussians[i];
      if (x.position != y.position || x.rotation.coeffs() != y.rotation.coeffs() ||
          x.log_scale != y.log_scale)
        return false;
    }
  return true;
}

fs::path run_dir(const std::string& name) {
  const fs::path p = fs::current_path() / "acceptance_runs" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Runs the command-line interface in process; throws with its stderr on failure.
std::string invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (code != 0) {
    std::string joined;
    for (const auto& a : args) joined += " " + a;
    throw std::runtime_error("flowsplat" + joined + " exited " + std::to_string(code) + ": " +
                             err.str());
  }
  return out.str();
}

// ---------------------------------------------------------------------------

Outcome solver_order() {
  const AnalyticField spin = analytic(AnalyticKind::spin);
  GaussianCloud c;
  for (const Eigen::Vector3d x : {Eigen::Vector3d(0.8, 0.5, 0.5), Eigen::Vector3d(0.5, 0.9, 0.2),
                                  Eigen::Vector3d(0.3, 0.4, 0.7)}) {
    GaussianState g;
    g.position = x;
    c.gaussians.push_back(g);
  }
  const std::vector<int> counts{50, 100, 200, 400};
  // Least-squares slope of log(error) against log(1/steps).
  auto order = [&](Method method, std::string& pairs) {
    std::vector<double> lx, ly;
    for (int n : counts) {
      IntegratorConfig cfg{method, n, n};
      const Trajectory tr = rollout(c, 0.0, 1.0, cfg, spin);
      lx.push_back(std::log(1.0 / n));
      ly.push_back(std::log(max_position_error(tr.states.back(), c)));
    }
    for (std::size_t k = 1; k < ly.size(); ++k)
      pairs += (k > 1 ? " " : "") + format("%.3f", (ly[k - 1] - ly[k]) / std::log(2.0));
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
      sxy += (lx[k] - mx) * (ly[k] - my);
      sxx += (lx[k] - mx) * (lx[k] - mx);
    }
    return sxy / sxx;
  };
  std::string rk4_pairs, euler_pairs;
  const double rk4 = order(Method::rk4, rk4_pairs);
  const double euler = order(Method::euler, euler_pairs);
  return {rk4 >= 3.8 && rk4 <= 4.2 && euler >= 0.9 && euler <= 1.1,
          "rk4 order " + format("%.3f", rk4) + " (pairwise " + rk4_pairs + "), euler order " +
              format("%.3f", euler) + " (pairwise " + euler_pairs + ")"};
}

Outcome reversibility() {
  testing::Rng rng(21);
  const GaussianCloud c = testing::random_cloud(rng, 50);
  IntegratorConfig cfg{Method::rk4, 100, 100};
  double worst = 0.0;
  std::string detail;
  for (AnalyticKind kind : {AnalyticKind::spin, AnalyticKind::vortex, AnalyticKind::wave}) {
    const AnalyticField f = analytic(kind);
    const Trajectory fwd = rollout(c, 0.0, 1.0, cfg, f);
    const Trajectory back = rollout(fwd.states.back(), 1.0, 0.0, cfg, f);
    const double e = max_position_error(back.states.back(), c);
    worst = std::max(worst, e);
    detail += std::string(detail.empty() ? "" : ", ") + std::string(to_string(kind)) + " " + sci(e);
  }
  return {worst < 1e-6, "max return error " + detail};
}

Outcome euler_drift() {
  testing::Rng rng(22);
  const GaussianCloud c = testing::random_cloud(rng, 20);
  const AnalyticField spin = analytic(AnalyticKind::spin);
  const Eigen::Vector3d axis_point = spin.params().center;
  auto radius = [&](const Eigen::Vector3d& x) {
    return std::hypot(x.x() - axis_point.x(), x.y() - axis_point.y());
  };
  auto radius_error = [&](Method method) {
    IntegratorConfig cfg{method, 500, 500};
    const Trajectory tr = rollout(c, 0.0, 5.0, cfg, spin);
    double e = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i)
      e = std::max(e, std::abs(radius(tr.states.back().gaussians[i].position) -
                               radius(c.gaussians[i].position)));
    return e;
  };
  const double euler = radius_error(Method::euler);
  const double rk4 = radius_error(Method::rk4);
  const double ratio = euler / rk4;
  return {ratio >= 100.0,
          "radius error euler " + sci(euler) + ", rk4 " + sci(rk4) + ", ratio " + sci(ratio)};
}

Outcome anchor_stabilization() {
  SyntheticOptions o;
  o.kind = "swirl";
  o.gaussians = 200;
  o.frames = 21;
  o.seed = 4;
  const SceneFile scene = generate_scene(o);
  const GroundTruth& truth = *scene.truth;
  // The model field is the true one plus a small uniform bias.
  AnalyticParams bias;
  bias.delta = {0.3, -0.2, 0.1};
  const FieldPtr truth_field = std::make_shared<AnalyticField>(analytic(AnalyticKind::swirl));
  const FieldPtr bias_field = std::make_shared<AnalyticField>(analytic(AnalyticKind::drift, bias));
  const FieldPtr model = compose_add(truth_field, bias_field, 0.1);
  AnchorSet anchors, origin;
  for (std::size_t f : {std::size_t{0}, std::size_t{10}, std::size_t{20}}) {
    GaussianCloud a = cloud_at_frame(scene.cloud, truth, f);
    a.time = truth.times[f];
    anchors.snapshot(a, truth.times[f]);
    if (f == 0) origin.snapshot(a, truth.times[f]);
  }
  IntegratorConfig cfg{Method::rk4, 100, 1};
  bool never_worse = true;
  double anchored_end = 0.0, origin_end = 0.0, anchored_max = 0.0, origin_max = 0.0;
  for (std::size_t f = 1; f < truth.frame_count(); ++f) {
    const double t = truth.times[f];
    const GaussianCloud target = cloud_at_frame(scene.cloud, truth, f);
    const double ea = max_position_error(anchor_aware_rollout(anchors, t, cfg, *model), target);
    const double eo = max_position_error(anchor_aware_rollout(origin, t, cfg, *model), target);
    never_worse = never_worse && ea <= eo;
    anchored_max = std::max(anchored_max, ea);
    origin_max = std::max(origin_max, eo);
    anchored_end = ea;
    origin_end = eo;
  }
  const bool reduced = origin_end > 0.0 && origin_end >= 2.0 * anchored_end;
  return {never_worse && reduced,
          std::string(never_worse ? "anchored <= single-origin at all 20 query times" :
                                    "anchored exceeded single-origin at some query time") +
              "; max error " + sci(anchored_max) + " vs " + sci(origin_max) + "; terminal " +
              sci(anchored_end) + " vs " + sci(origin_end)};
}

Outcome gradient_check() {
  testing::Rng rng(23);
  double worst = 0.0;
  std::string worst_at;
  bool all_terms = true;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = static_cast<std::size_t>(rng.integer(3, 6));
    GaussianCloud cloud = testing::random_cloud(rng, n);
    // Four frames a third apart; three unit steps per unit time make the
    // unrolled rollout three RK4 steps long.
    const Eigen::Vector3d v = rng.vec3(-0.4, 0.4);
    GroundTruth truth;
    for (int f = 0; f < 4; ++f) {
      truth.times.push_back(f / 3.0);
      std::vector<Eigen::Vector3d> row;
      for (const auto& g : cloud.gaussians)
        row.push_back(g.position + (f / 3.0) * v + rng.vec3(-0.02, 0.02));
      truth.positions.push_back(row);
    }
    TrainingConfig c;
    c.seed = static_cast<std::uint64_t>(trial);
    c.grid = {rng.integer(2, 4), rng.integer(2, 4), rng.integer(1, 3), 0.3};
    c.mlp.hidden = {rng.integer(2, 5), rng.integer(2, 5)};
    c.mlp.time_frequencies = rng.integer(1, 3);
    c.mlp.output_scale = 0.5;
    c.steps_per_unit = 3;
    c.neighbor_count = rng.integer(1, 3);
    c.coherence_step = 0.05;
    c.coherence_variant = trial % 2 ? CoherenceVariant::relative : CoherenceVariant::literal;
    c.lambda_coh = rng.uniform(0.1, 1.0);
    c.lambda_anchor = rng.uniform(0.1, 1.0);
    c.lambda_tv = rng.uniform(0.01, 0.1);
    const TrainingProblem p = make_problem(cloud, truth, c);
    NeuralVelocityField field = initial_field(p, c);
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    const Evaluation e = evaluate_objective(field, p, c, rows, true);
    all_terms = all_terms && e.report.data > 0 && e.report.coherence > 0 && e.report.anchor > 0 &&
                e.report.tv > 0;

    std::vector<double> theta = field.parameters();
    std::vector<double> fd(theta.size());
    const double h = 1e-6;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double keep = theta[i];
      theta[i] = keep + h;
      field.set_parameters(theta);
      const double fp = evaluate_objective(field, p, c, rows, false).report.total;
      theta[i] = keep - h;
      field.set_parameters(theta);
      const double fm = evaluate_objective(field, p, c, rows, false).report.total;
      theta[i] = keep;
      fd[i] = (fp - fm) / (2 * h);
    }
    field.set_parameters(theta);
    for (const auto& g : field.parameter_groups()) {
      double diff = 0.0, norm = 0.0;
      for (std::size_t i = g.offset; i < g.offset + g.size; ++i) {
        diff += (e.gradient[i] - fd[i]) * (e.gradient[i] - fd[i]);
        norm += fd[i] * fd[i];
      }
      const double rel = std::sqrt(diff) / std::max(std::sqrt(norm), 1e-7);
      if (rel > worst) {
        worst = rel;
        worst_at = "config " + std::to_string(trial) + " group " + g.name;
      }
    }
  }
  return {worst < 1e-4 && all_terms,
          "worst relative error " + sci(worst) + " (" + worst_at + ")" +
              (all_terms ? ", all four loss terms active" : ", some loss term was zero")};
}

double mean_error_at(const fs::path& metrics_csv, std::size_t frame) {
  std::istringstream in(read_text_file(metrics_csv));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.rfind(std::to_string(frame) + ",", 0) != 0) continue;
    return std::stod(line.substr(line.rfind(',') + 1));
  }
  throw std::runtime_error("frame " + std::to_string(frame) + " missing from " +
                           metrics_csv.string());
}

Outcome sparse_frames() {
  const fs::path root = run_dir("sparse_frames");
  const std::string scene = (root / "scene" / "scene.json").string();
  invoke({"generate", "--kind", "drift", "--params", R"({"delta": 0.3})", "--frames", "20",
          "--out", (root / "scene").string()});

  auto pipeline = [&](const std::string& name, const std::vector<std::string>& train_flags) {
    const fs::path dir = root / name;
    std::vector<std::string> train{"train", "--scene", scene, "--out", (dir / "train").string()};
    train.insert(train.end(), train_flags.begin(), train_flags.end());
    invoke(train);
    invoke({"simulate", "--checkpoint", (dir / "train" / "checkpoint.json").string(), "--anchored",
            "--scene", scene, "--frames-from-scene", "--out", (dir / "simulate").string()});
    invoke({"eval", "--trajectory", (dir / "simulate" / "trajectory.csv").string(), "--truth",
            scene, "--metrics", "position", "--train-manifest",
            (dir / "train" / kManifestName).string(), "--out", (dir / "eval").string()});
    return read_manifest(dir / "eval" / kManifestName);
  };
  const RunManifest sparse = pipeline("stride4", {"--stride", "4"});
  const double held_out = sparse.extra["means"]["held-out"]["position"].get<double>();
  pipeline("fraction075", {"--train-fraction", "0.75"});
  const double at_end = mean_error_at(root / "fraction075" / "eval" / "metrics.csv", 19);
  return {held_out < 0.01 && at_end < 0.05,
          "k=4 held-out mean position error " + sci(held_out) + " (< 0.01); train-fraction 0.75 "
          "error at t=1 " + sci(at_end) + " (< 0.05)"};
}

Outcome composition() {
  testing::Rng rng(24);
  const GaussianCloud c = testing::random_cloud(rng, 60);
  const FieldPtr base = std::make_shared<AnalyticField>(analytic(AnalyticKind::swirl));
  const FieldPtr injected = std::make_shared<AnalyticField>(analytic(AnalyticKind::vortex));
  IntegratorConfig cfg{Method::rk4, 100, 10};
  auto constant = [](double v) {
    GeometricMask m;
    m.value = v;
    return m;
  };
  const bool zero_is_base =
      bitwise_equal(rollout(c, 0, 1, cfg, *blend_masked(base, injected, constant(0.0))),
                    rollout(c, 0, 1, cfg, *base));
  const bool one_is_injected =
      bitwise_equal(rollout(c, 0, 1, cfg, *blend_masked(base, injected, constant(1.0))),
                    rollout(c, 0, 1, cfg, *injected));

  GeometricMask sphere;
  sphere.shape = GeometricMask::Shape::sphere;
  sphere.center = {0.5, 0.5, 0.5};
  sphere.radius = 0.35;
  const AnalyticField spin = analytic(AnalyticKind::spin);
  const FieldPtr field =
      blend_masked(std::make_shared<ZeroField>(), std::make_shared<AnalyticField>(spin), sphere);
  IntegratorConfig fine{Method::rk4, 400, 20};
  const Trajectory tr = rollout(c, 0.0, 1.0, fine, *field);
  double inside_err = 0.0, outside_err = 0.0;
  int inside = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Eigen::Vector3d x0 = c.gaussians[i].position;
    const bool in = sphere(x0) == 1.0;
    inside += in;
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      const Eigen::Vector3d x = tr.states[k].gaussians[i].position;
      if (!in) {
        outside_err = std::max(outside_err, (x - x0).norm());
        continue;
      }
      const double a = spin.params().omega * tr.times[k];
      const Eigen::Vector3d d = x0 - sphere.center;
      const Eigen::Vector3d expect =
          sphere.center + Eigen::Vector3d(std::cos(a) * d.x() - std::sin(a) * d.y(),
                                          std::sin(a) * d.x() + std::cos(a) * d.y(), d.z());
      inside_err = std::max(inside_err, (x - expect).norm());
    }
  }
  const bool orbits = inside > 0 && inside < static_cast<int>(c.size()) && inside_err < 1e-6 &&
                      outside_err < 1e-6;
  return {zero_is_base && one_is_injected && orbits,
          std::string("mask 0 ") + (zero_is_base ? "bitwise base" : "DIFFERS from base") +
              ", mask 1 " + (one_is_injected ? "bitwise injected" : "DIFFERS from injected") +
              "; sphere: " + std::to_string(inside) + " inside, orbit error " + sci(inside_err) +
              ", outside motion " + sci(outside_err)};
}

Outcome coherence() {
  GaussianCloud pair;
  pair.gaussians.resize(2);
  pair.gaussians[1].position = {1, 0, 0};
  const double two_point = coherence_loss(pair, knn(pair, 1), ZeroField(), 0.01);

  testing::Rng rng(25);
  const GaussianCloud c = testing::random_cloud(rng, 100);
  const NeighborLists n = knn(c, 8);
  AnalyticParams shift;
  shift.delta = {0.7, -0.4, 0.2};
  const double translated =
      coherence_loss(c, n, analytic(AnalyticKind::drift, shift), 0.01, CoherenceVariant::relative);
  const double vortex = coherence_loss(c, n, analytic(AnalyticKind::vortex), 0.01,
                                       CoherenceVariant::relative);
  return {std::abs(two_point - 1.0) < 1e-6 && translated < 1e-20 && vortex > 0.0,
          "two-point literal " + format("%.9f", two_point) + ", relative under translation " +
              sci(translated) + ", relative under vortex " + sci(vortex)};
}

Outcome conservation() {
  AnalyticParams p;
  p.center = Eigen::Vector3d::Zero();
  p.mu = 0.0;
  const AnalyticField orbital = analytic(AnalyticKind::orbital, p);
  GaussianCloud c;
  c.gaussians.resize(1);
  c.gaussians[0].position = {1.0, 0.0, 0.0};
  const std::vector<Eigen::Vector3d> v0{{0.0, 1.0, 0.0}};
  const double period = 2.0 * M_PI;
  IntegratorConfig cfg{Method::rk4, static_cast<int>(std::lround(period / 1e-3)), 50};
  const Trajectory tr = rollout(c, 0.0, period, cfg, orbital, &v0);
  auto energy = [&](std::size_t k) {
    return 0.5 * tr.aux_velocities[k][0].squaredNorm() -
           p.gravity_constant / tr.states[k].gaussians[0].position.norm();
  };
  double drift = 0.0;
  for (std::size_t k = 0; k < tr.times.size(); ++k)
    drift = std::max(drift, std::abs(energy(k) - energy(0)) / std::abs(energy(0)));

  const AnalyticField spin = analytic(AnalyticKind::spin);
  testing::Rng rng(26);
  double divergence = 0.0;
  const double h = 1e-5;
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d x = rng.vec3(-1, 2);
    double div = 0.0;
    for (int a = 0; a < 3; ++a) {
      Eigen::Vector3d e = Eigen::Vector3d::Zero();
      e[a] = h;
      div += (spin.at(x + e, {}, 0.0).d_position[a] - spin.at(x - e, {}, 0.0).d_position[a]) /
             (2 * h);
    }
    divergence = std::max(divergence, std::abs(div));
  }
  return {drift < 1e-5 && divergence < 1e-6,
          "orbital relative energy drift " + sci(drift) + ", spin max |divergence| " +
              sci(divergence)};
}

Outcome renderer_metrics() {
  CameraSpec cam;
  cam.width = 65;
  cam.height = 65;
  GaussianCloud one;
  GaussianState g;
  g.position = cam.look_at;
  g.log_scale = Eigen::Vector3d::Constant(std::log(0.08));
  g.color = {1, 1, 1};
  g.opacity = 1.0;
  one.gaussians.push_back(g);
  const Image im = rasterize(one, cam);
  int bx = 0, by = 0;
  for (int y = 0; y < im.height; ++y)
    for (int x = 0; x < im.width; ++x)
      if (im.at(x, y, 0) > im.at(bx, by, 0)) {
        bx = x;
        by = y;
      }
  const bool centred = bx == 32 && by == 32;

  testing::Rng rng(27);
  GaussianCloud c = testing::random_cloud(rng, 80);
  for (auto& q : c.gaussians) q.log_scale = rng.vec3(-3.5, -2.0);
  const Image a = rasterize(c, cam);
  const double self_psnr = psnr(a, a);
  const double self_ssim = ssim(a, a);
  GaussianCloud shuffled = c;
  for (std::size_t i = shuffled.size(); i-- > 1;)
    std::swap(shuffled.gaussians[i],
              shuffled.gaussians[static_cast<std::size_t>(rng.integer(0, static_cast<int>(i)))]);
  const bool permutation = rasterize(shuffled, cam).pixels == a.pixels;
  const bool pass = centred && self_psnr == kPsnrCap && std::abs(self_ssim - 1.0) < 1e-12 &&
                    permutation;
  return {pass, "peak at (" + std::to_string(bx) + "," + std::to_string(by) + "), self psnr " +
                    format("%.1f", self_psnr) + ", self ssim " + format("%.12f", self_ssim) +
                    (permutation ? ", permutation invariant" : ", permutation CHANGED the image")};
}

Outcome determinism() {
  const fs::path root = run_dir("determinism");
  auto d = [&](const std::string& name) { return (root / name).string(); };
  const std::string scene = d("generate") + "/scene.json";
  write_text_file(root / "train.json", R"({"epochs": 20, "steps_per_unit": 20,
    "grid": {"spatial_resolution": 6, "time_resolution": 4, "channels": 3, "init_range": 0.1},
    "mlp": {"hidden": [12, 12], "time_frequencies": 2, "output_scale": 0.0}})");
  invoke({"generate", "--kind", "swirl", "--gaussians", "24", "--frames", "8", "--seed", "3",
          "--out", d("generate")});
  invoke({"train", "--scene", scene, "--config", d("train.json"), "--stride", "2", "--out",
          d("train")});
  invoke({"simulate", "--checkpoint", d("train") + "/checkpoint.json", "--anchored", "--scene",
          scene, "--frames-from-scene", "--out", d("simulate")});
  invoke({"inject", "--checkpoint", d("train") + "/checkpoint.json", "--inject",
          R"({"kind": "diffusion_gas"})", "--mask",
          R"({"shape": "sphere", "center": [0.5, 0.5, 0.5], "radius": 0.3, "edge": 0.1})",
          "--steps", "20", "--seed", "5", "--out", d("inject")});
  invoke({"render", "--scene", scene, "--trajectory", d("simulate") + "/trajectory.csv", "--out",
          d("render")});
  invoke({"eval", "--trajectory", d("simulate") + "/trajectory.csv", "--truth", scene,
          "--train-manifest", d("train") + "/manifest.json", "--out", d("eval")});

  std::string detail;
  bool all = true;
  for (const std::string name : {"generate", "train", "simulate", "inject", "render", "eval"}) {
    const std::string out = invoke({"rerun", "--manifest", d(name) + "/manifest.json", "--out",
                                    d(name + "_rerun"), "--verify"});
    const bool same = out.find("reproduced bitwise") != std::string::npos;
    const std::size_t files = read_manifest(root / name / kManifestName).artifacts.size();
    all = all && same;
    detail += (detail.empty() ? "" : ", ") + name + " " + std::to_string(files) +
              (same ? " files identical" : " files DIFFER");
  }
  return {all, detail};
}

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;  // 0: no runtime bound
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "solver order", 5, solver_order},
      {2, "reversibility", 5, reversibility},
      {3, "euler vs rk4 drift", 10, euler_drift},
      {4, "anchor stabilization", 30, anchor_stabilization},
      {5, "gradient correctness", 60, gradient_check},
      {6, "sparse-frame learning", 600, sparse_frames},
      {7, "composition algebra", 5, composition},
      {8, "coherence regularizer", 1, coherence},
      {9, "conservation", 5, conservation},
      {10, "renderer and metrics", 5, renderer_metrics},
      {11, "determinism", 0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string timing = format("%.2f s", seconds);
    if (c.limit_seconds > 0) {
      timing += format(" of %.0f s", c.limit_seconds);
      if (seconds >= c.limit_seconds) {
        o.pass = false;
        timing += " EXCEEDED";
      }
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << o.detail
              << " (" << timing << ")" << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
