#include "flowsplat/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>

#include "flowsplat/checkpoint.hpp"
#include "flowsplat/error.hpp"
#include "flowsplat/field_spec.hpp"
#include "flowsplat/integrate.hpp"
#include "flowsplat/metrics.hpp"
#include "flowsplat/render.hpp"
#include "flowsplat/scene_io.hpp"
#include "flowsplat/synthetic.hpp"
#include "flowsplat/train.hpp"

namespace flowsplat::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Option tables

enum class Kind { text, integer, real, flag, path, json_value };

struct OptionSpec {
  const char* flag;
  const char* key;
  Kind kind;
  const char* help;
};

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"generate", "train",  "simulate",
                                                 "inject",   "render", "eval"};
  return names;
}

std::vector<OptionSpec> integrator_options() {
  return {{"--t0", "t0", Kind::real, "start time"},
          {"--t1", "t1", Kind::real, "end time (t1 < t0 integrates backward)"},
          {"--method", "method", Kind::text, "integrator: euler or rk4"},
          {"--steps", "steps", Kind::integer, "number of steps over [t0, t1]"},
          {"--record-stride", "record_stride", Kind::integer, "record every N steps"}};
}

std::vector<OptionSpec> options_for(const std::string& command) {
  std::vector<OptionSpec> o = {{"--seed", "seed", Kind::integer, "root seed"}};
  auto add = [&o](std::vector<OptionSpec> more) { o.insert(o.end(), more.begin(), more.end()); };
  if (command == "generate") {
    add({{"--kind", "kind", Kind::text, "analytic field kind or zero"},
         {"--params", "params", Kind::json_value, "field parameters (JSON text or file)"},
         {"--gaussians", "gaussians", Kind::integer, "number of Gaussians"},
         {"--frames", "frames", Kind::integer, "number of ground-truth frames"},
         {"--gt-steps", "gt_steps_per_unit", Kind::integer, "ground-truth RK4 steps per unit time"},
         {"--width", "width", Kind::integer, "camera width"},
         {"--height", "height", Kind::integer, "camera height"}});
  } else if (command == "train") {
    add({{"--scene", "scene", Kind::path, "scene with ground-truth trajectories"},
         {"--stride", "frame_stride", Kind::integer, "supervise every k-th frame"},
         {"--train-fraction", "train_fraction", Kind::real, "supervise frames with t <= F"},
         {"--epochs", "epochs", Kind::integer, "optimizer epochs"},
         {"--lr", "learning_rate", Kind::real, "Adam learning rate"},
         {"--steps", "steps_per_unit", Kind::integer, "unroll steps per unit time"},
         {"--coherence", "coherence_variant", Kind::text, "literal or relative"},
         {"--lambda-coh", "lambda_coh", Kind::real, "coherence weight"},
         {"--lambda-anchor", "lambda_anchor", Kind::real, "anchor weight"},
         {"--lambda-tv", "lambda_tv", Kind::real, "plane TV weight"}});
  } else if (command == "simulate") {
    add({{"--checkpoint", "checkpoint", Kind::path, "trained checkpoint"},
         {"--scene", "scene", Kind::path, "scene providing the initial cloud"},
         {"--field", "field", Kind::json_value, "field specification (JSON text or file)"}});
    add(integrator_options());
    add({{"--anchored", "anchored", Kind::flag, "reinitialize from the checkpoint's anchors"},
         {"--frames-from-scene", "frames_from_scene", Kind::flag,
          "record at the scene's ground-truth times"}});
  } else if (command == "inject") {
    add({{"--checkpoint", "checkpoint", Kind::path, "trained checkpoint used as base field"},
         {"--scene", "scene", Kind::path, "scene providing the initial cloud"},
         {"--base", "base", Kind::json_value, "base field specification (default: zero)"},
         {"--inject", "inject", Kind::json_value, "injected field specification"},
         {"--mask", "mask", Kind::json_value, "mask specification (blend); omit to add"},
         {"--lambda", "lambda", Kind::real, "weight of the injected field when adding"}});
    add(integrator_options());
    add({{"--render", "render", Kind::flag, "also render every recorded state"},
         {"--camera", "camera", Kind::integer, "scene camera index"}});
  } else if (command == "render") {
    add({{"--scene", "scene", Kind::path, "scene with Gaussian attributes and cameras"},
         {"--trajectory", "trajectory", Kind::path, "trajectory CSV to render frame by frame"},
         {"--camera", "camera", Kind::integer, "scene camera index"},
         {"--width", "width", Kind::integer, "override image width"},
         {"--height", "height", Kind::integer, "override image height"}});
  } else if (command == "eval") {
    add({{"--trajectory", "trajectory", Kind::path, "predicted trajectory CSV"},
         {"--truth", "truth", Kind::path, "ground truth (scene JSON or trajectory CSV)"},
         {"--scene", "scene", Kind::path, "scene for rendering (default: the truth scene)"},
         {"--metrics", "metrics", Kind::text, "comma list of position,psnr,ssim,dssim"},
         {"--train-manifest", "train_manifest", Kind::path, "train manifest to flag frames"},
         {"--camera", "camera", Kind::integer, "scene camera index"}});
  }
  return o;
}

json default_config_impl(const std::string& command) {
  if (command == "generate")
    return {{"kind", "drift"}, {"params", json::object()}, {"gaussians", 50}, {"frames", 20},
            {"seed", 0},       {"gt_steps_per_unit", 1000}, {"width", 64},   {"height", 64}};
  if (command == "train") {
    json c = training_config_to_json(TrainingConfig{});
    c["scene"] = nullptr;
    c["neighbor_count"] = nullptr;  // null: use the scene's knn_k
    return c;
  }
  const json integrator = {{"t0", 0.0},         {"t1", 1.0},          {"method", "rk4"},
                           {"steps", 100},      {"record_stride", 1}};
  if (command == "simulate") {
    json c = {{"checkpoint", nullptr}, {"scene", nullptr},   {"field", nullptr},
              {"anchored", false},     {"frames_from_scene", false}, {"seed", 0}};
    c.update(integrator);
    return c;
  }
  if (command == "inject") {
    json c = {{"checkpoint", nullptr}, {"scene", nullptr}, {"base", nullptr},
              {"inject", nullptr},     {"mask", nullptr},  {"lambda", 1.0},
              {"render", false},       {"camera", 0},      {"seed", 0}};
    c.update(integrator);
    return c;
  }
  if (command == "render")
    return {{"scene", nullptr}, {"trajectory", nullptr}, {"camera", 0},
            {"width", nullptr}, {"height", nullptr},     {"seed", 0}};
  if (command == "eval")
    return {{"trajectory", nullptr},     {"truth", nullptr},          {"scene", nullptr},
            {"metrics", "position,psnr,ssim"}, {"train_manifest", nullptr}, {"camera", 0},
            {"seed", 0}};
  throw UsageError("unknown command '" + command + "'");
}

// ---------------------------------------------------------------------------
// Value conversion

json json_argument(const std::string& text, const std::string& what) {
  const auto first = text.find_first_not_of(" \t\r\n");
  try {
    if (first != std::string::npos && (text[first] == '{' || text[first] == '['))
      return json::parse(text);
    return json::parse(read_text_file(text));
  } catch (const json::parse_error& e) {
    throw ParseError(what + ": " + e.what());
  }
}

json convert(const OptionSpec& spec, const std::string& raw) {
  const std::string what = spec.flag;
  try {
    std::size_t used = 0;
    switch (spec.kind) {
      case Kind::integer: {
        const long long v = std::stoll(raw, &used);
        if (used != raw.size()) break;
        if (std::string(spec.key) == "seed") {
          if (v < 0) throw UsageError(what + ": seed must be non-negative");
          return static_cast<std::uint64_t>(v);
        }
        return v;
      }
      case Kind::real: {
        const double v = std::stod(raw, &used);
        if (used != raw.size() || !std::isfinite(v)) break;
        return v;
      }
      case Kind::path:
        return fs::absolute(raw).lexically_normal().string();
      case Kind::json_value:
        return json_argument(raw, what);
      case Kind::text:
      case Kind::flag:
        return raw;
    }
  } catch (const std::invalid_argument&) {
  } catch (const std::out_of_range&) {
  }
  throw UsageError(what + ": invalid value '" + raw + "'");
}

// Config-file values: paths are made absolute and JSON arguments given as a
// file name are loaded.
json normalize_config_value(const OptionSpec& spec, const json& value) {
  if (value.is_null()) return value;
  if (spec.kind == Kind::path && value.is_string()) return convert(spec, value.get<std::string>());
  if (spec.kind == Kind::json_value && value.is_string())
    return json_argument(value.get<std::string>(), spec.flag);
  return value;
}

// ---------------------------------------------------------------------------
// Typed config access

template <typename T>
T get(const json& c, const char* key) {
  try {
    return c.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError(std::string("option '") + key + "' is missing or has the wrong type");
  }
}

bool has(const json& c, const char* key) { return c.contains(key) && !c.at(key).is_null(); }

fs::path require_path(const json& c, const char* key, const char* flag) {
  if (!has(c, key)) throw UsageError(std::string(flag) + " is required");
  return get<std::string>(c, key);
}

Method method_of(const json& c) {
  const std::string name = get<std::string>(c, "method");
  const auto m = method_from_string(name);
  if (!m) throw UsageError("--method: expected euler or rk4, got '" + name + "'");
  return *m;
}

// Analytic leaves without their own seed inherit the root seed.
void apply_default_seed(json& spec, std::uint64_t seed) {
  if (!spec.is_object()) return;
  if (spec.contains("children") && spec["children"].is_array()) {
    for (auto& child : spec["children"]) apply_default_seed(child, seed);
    return;
  }
  if (spec.contains("kind") && spec["kind"].is_string()) {
    const std::string kind = spec["kind"].get<std::string>();
    if (kind != "zero" && kind != "neural" && !spec.contains("seed")) spec["seed"] = seed;
  }
}

FieldPtr load_neural(const std::string& path) {
  return std::make_shared<NeuralVelocityField>(load_checkpoint(path).field);
}

FieldPtr field_from_spec(json spec, std::uint64_t seed) {
  apply_default_seed(spec, seed);
  return build_field(spec, load_neural);
}

std::string frame_name(std::size_t index) {
  char name[32];
  std::snprintf(name, sizeof name, "frame_%04zu.ppm", index);
  return name;
}

CameraSpec camera_of(const SceneFile* scene, const json& c) {
  const auto index = get<long long>(c, "camera");
  if (!scene || scene->cameras.empty()) {
    if (index != 0) throw UsageError("--camera: the scene defines no cameras");
    return CameraSpec{};
  }
  if (index < 0 || static_cast<std::size_t>(index) >= scene->cameras.size())
    throw UsageError("--camera: index " + std::to_string(index) + " out of range");
  return scene->cameras[static_cast<std::size_t>(index)];
}

std::vector<Eigen::Vector3d>* velocities_of(SceneFile* scene) {
  return scene && scene->velocities ? &*scene->velocities : nullptr;
}

// Cloud with positions replaced, everything else from `base`.
GaussianCloud with_positions(const GaussianCloud& base, const std::vector<Eigen::Vector3d>& p,
                             double t) {
  if (p.size() != base.size())
    throw ValidationError("trajectory frame has " + std::to_string(p.size()) +
                          " Gaussians, scene has " + std::to_string(base.size()));
  GaussianCloud c = base;
  for (std::size_t i = 0; i < p.size(); ++i) c.gaussians[i].position = p[i];
  c.time = t;
  c.refit_bounds();
  return c;
}

// Uniform record times of a rollout over [t0, t1].
std::vector<double> record_times(double t0, double t1, int steps, int stride) {
  std::vector<double> times{t0};
  const double h = (t1 - t0) / steps;
  for (int k = stride; k < steps; k += stride) times.push_back(t0 + k * h);
  times.push_back(t1);
  return times;
}

// ---------------------------------------------------------------------------
// Commands

RunManifest cmd_generate(const json& c, const fs::path& out, std::ostream& log) {
  SyntheticOptions o;
  o.kind = get<std::string>(c, "kind");
  o.params = c.at("params");
  const auto gaussians = get<long long>(c, "gaussians");
  const auto frames = get<long long>(c, "frames");
  if (gaussians < 1) throw UsageError("--gaussians must be >= 1");
  if (frames < 2) throw UsageError("--frames must be >= 2");
  o.gaussians = static_cast<std::size_t>(gaussians);
  o.frames = static_cast<std::size_t>(frames);
  o.seed = get<std::uint64_t>(c, "seed");
  o.gt_steps_per_unit = get<int>(c, "gt_steps_per_unit");
  o.camera.width = get<int>(c, "width");
  o.camera.height = get<int>(c, "height");
  if (o.kind != "zero" && !analytic_kind_from_string(o.kind))
    throw UsageError("--kind: unknown field kind '" + o.kind + "'");
  SceneFile scene;
  try {
    scene = generate_scene(o);
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
  save_scene(scene, out / "scene.json");
  write_trajectory_csv(out / "ground_truth.csv", scene.truth->times, scene.truth->positions);
  log << "generated " << o.kind << " scene: " << o.gaussians << " Gaussians, " << o.frames
      << " frames\n";
  RunManifest m;
  m.artifacts = {{"scene.json", ""}, {"ground_truth.csv", ""}};
  return m;
}

RunManifest cmd_train(const json& c, const fs::path& out, std::ostream& log) {
  const SceneFile scene = load_scene(require_path(c, "scene", "--scene"));
  if (!scene.truth) throw UsageError("train: the scene has no ground-truth trajectories");
  json tc = c;
  tc.erase("scene");
  if (!has(tc, "neighbor_count")) tc["neighbor_count"] = scene.neighbor_count;
  const TrainingConfig config = training_config_from_json(tc);

  const FitResult result = fit(scene.cloud, *scene.truth, config);
  json training = training_config_to_json(config);
  std::vector<double> supervised_times;
  for (std::size_t f : result.frames) supervised_times.push_back(scene.truth->times[f]);
  training["supervised_frames"] = result.frames;
  training["supervised_times"] = supervised_times;
  save_checkpoint(out / "checkpoint.json", result.field, result.anchors, training);
  write_loss_csv(out / "loss.csv", result.history);

  std::vector<double> anchor_times;
  for (const auto& a : result.anchors.anchors()) anchor_times.push_back(a.time);
  log << "supervised frames: " << result.frames.size() << "\n";
  if (!result.history.empty()) {
    const LossReport& r = result.history.back();
    log << "final loss: total " << r.total << " data " << r.data << " coherence " << r.coherence
        << " anchor " << r.anchor << " tv " << r.tv << "\n";
  }
  RunManifest m;
  m.artifacts = {{"checkpoint.json", ""}, {"loss.csv", ""}};
  m.extra = {{"supervised_frames", result.frames},
             {"supervised_times", supervised_times},
             {"supervised_frame_count", result.frames.size()},
             {"anchor_times", anchor_times}};
  return m;
}

RunManifest cmd_simulate(const json& c, const fs::path& out, std::ostream& log) {
  const double t0 = get<double>(c, "t0");
  const double t1 = get<double>(c, "t1");
  if (t0 == t1) throw UsageError("--t0 and --t1 must differ");
  const int steps = get<int>(c, "steps");
  const int stride = get<int>(c, "record_stride");
  if (steps < 1 || stride < 1) throw UsageError("--steps and --record-stride must be >= 1");
  const Method method = method_of(c);
  const bool anchored = get<bool>(c, "anchored");
  const bool at_frames = get<bool>(c, "frames_from_scene");
  const auto seed = get<std::uint64_t>(c, "seed");

  std::optional<SceneFile> scene;
  std::optional<Checkpoint> ck;
  if (has(c, "scene")) scene = load_scene(get<std::string>(c, "scene"));
  if (has(c, "checkpoint")) ck = load_checkpoint(get<std::string>(c, "checkpoint"));

  FieldPtr field;
  if (has(c, "field"))
    field = field_from_spec(c.at("field"), seed);
  else if (ck)
    field = std::make_shared<NeuralVelocityField>(ck->field);
  else if (scene && scene->field)
    field = field_from_spec(*scene->field, seed);
  else
    throw UsageError("simulate: give --checkpoint, --field, or a scene with a field block");

  if (anchored && (!ck || ck->anchors.empty()))
    throw UsageError("--anchored requires a checkpoint with anchors");
  if (!scene && !ck) throw UsageError("simulate: give --scene or --checkpoint for the initial cloud");

  const Direction direction = t1 > t0 ? Direction::forward : Direction::backward;
  const double span = std::abs(t1 - t0);
  IntegratorConfig per_unit;
  per_unit.method = method;
  per_unit.step_count = std::max(1, static_cast<int>(std::ceil(steps / span - 1e-9)));

  std::vector<double> times;
  if (at_frames) {
    if (!scene || !scene->truth)
      throw UsageError("--frames-from-scene requires a scene with trajectories");
    const double lo = std::min(t0, t1);
    const double hi = std::max(t0, t1);
    for (double t : scene->truth->times)
      if (t >= lo - 1e-12 && t <= hi + 1e-12) times.push_back(t);
    if (direction == Direction::backward) std::reverse(times.begin(), times.end());
    if (times.empty()) throw UsageError("no scene frames inside [t0, t1]");
  }

  Trajectory traj;
  if (anchored) {
    if (times.empty()) times = record_times(t0, t1, steps, stride);
    for (double t : times) {
      traj.times.push_back(t);
      traj.states.push_back(anchor_aware_rollout(ck->anchors, t, per_unit, *field, direction));
    }
  } else {
    GaussianCloud start;
    if (scene) {
      start = scene->cloud;
    } else {
      start = anchor_aware_rollout(ck->anchors, t0, per_unit, *field, direction);
    }
    start.time = t0;
    std::vector<Eigen::Vector3d>* v = velocities_of(scene ? &*scene : nullptr);
    if (at_frames) {
      traj = rollout_through(start, times, per_unit, *field, v);
    } else {
      IntegratorConfig config{method, steps, stride};
      traj = rollout(start, t0, t1, config, *field, v);
    }
  }
  write_trajectory_csv(out / "trajectory.csv", traj.times, traj.positions());
  log << "simulated " << traj.times.size() << " states from t=" << t0 << " to t=" << t1 << " ("
      << to_string(method) << (anchored ? ", anchored" : "") << ")\n";
  RunManifest m;
  m.artifacts = {{"trajectory.csv", ""}};
  m.extra = {{"states", traj.times.size()}};
  return m;
}

RunManifest cmd_inject(const json& c, const fs::path& out, std::ostream& log) {
  const double t0 = get<double>(c, "t0");
  const double t1 = get<double>(c, "t1");
  if (t0 == t1) throw UsageError("--t0 and --t1 must differ");
  const int steps = get<int>(c, "steps");
  const int stride = get<int>(c, "record_stride");
  if (steps < 1 || stride < 1) throw UsageError("--steps and --record-stride must be >= 1");
  const auto seed = get<std::uint64_t>(c, "seed");
  if (!has(c, "inject")) throw UsageError("--inject is required");

  std::optional<SceneFile> scene;
  std::optional<Checkpoint> ck;
  if (has(c, "scene")) scene = load_scene(get<std::string>(c, "scene"));
  if (has(c, "checkpoint")) ck = load_checkpoint(get<std::string>(c, "checkpoint"));
  if (!scene && !ck) throw UsageError("inject: give --scene or --checkpoint for the initial cloud");

  FieldPtr base;
  if (ck)
    base = std::make_shared<NeuralVelocityField>(ck->field);
  else if (has(c, "base"))
    base = field_from_spec(c.at("base"), seed);
  else
    base = std::make_shared<ZeroField>();
  FieldPtr injected = field_from_spec(c.at("inject"), seed);
  FieldPtr field;
  if (has(c, "mask"))
    field = blend_masked(base, injected, mask_from_json(c.at("mask")));
  else
    field = compose_add(base, injected, get<double>(c, "lambda"));

  IntegratorConfig config{method_of(c), steps, stride};
  GaussianCloud start;
  if (scene) {
    start = scene->cloud;
  } else {
    IntegratorConfig per_unit{config.method, std::max(1, static_cast<int>(std::ceil(
                                                             steps / std::abs(t1 - t0) - 1e-9))),
                              1};
    start = anchor_aware_rollout(ck->anchors, t0, per_unit, *base,
                                 t1 > t0 ? Direction::forward : Direction::backward);
  }
  start.time = t0;
  const Trajectory traj =
      rollout(start, t0, t1, config, *field, velocities_of(scene ? &*scene : nullptr));
  write_trajectory_csv(out / "trajectory.csv", traj.times, traj.positions());

  RunManifest m;
  m.artifacts = {{"trajectory.csv", ""}};
  if (get<bool>(c, "render")) {
    const CameraSpec camera = camera_of(scene ? &*scene : nullptr, c);
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
      write_ppm(out / frame_name(k), rasterize(traj.states[k], camera));
      m.artifacts.push_back({frame_name(k), ""});
    }
  }
  log << "injected rollout: " << traj.times.size() << " states\n";
  return m;
}

RunManifest cmd_render(const json& c, const fs::path& out, std::ostream& log) {
  SceneFile scene = load_scene(require_path(c, "scene", "--scene"));
  CameraSpec camera = camera_of(&scene, c);
  if (has(c, "width")) camera.width = get<int>(c, "width");
  if (has(c, "height")) camera.height = get<int>(c, "height");
  validate(camera);

  std::vector<GaussianCloud> clouds;
  if (has(c, "trajectory")) {
    const GroundTruth traj = read_trajectory_csv(get<std::string>(c, "trajectory"));
    for (std::size_t f = 0; f < traj.frame_count(); ++f)
      clouds.push_back(with_positions(scene.cloud, traj.positions[f], traj.times[f]));
  } else {
    clouds.push_back(scene.cloud);
  }
  RunManifest m;
  RenderStats stats;
  for (std::size_t k = 0; k < clouds.size(); ++k) {
    write_ppm(out / frame_name(k), rasterize(clouds[k], camera, &stats));
    m.artifacts.push_back({frame_name(k), ""});
  }
  log << "rendered " << clouds.size() << " frame(s); discarded " << stats.behind_near
      << " behind the near plane, " << stats.degenerate << " degenerate\n";
  m.extra = {{"discarded_behind_near", stats.behind_near},
             {"discarded_degenerate", stats.degenerate}};
  return m;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

RunManifest cmd_eval(const json& c, const fs::path& out, std::ostream& log) {
  const std::vector<std::string> metrics = split_list(get<std::string>(c, "metrics"));
  bool want_images = false;
  for (const auto& name : metrics) {
    if (name == "lpips")
      throw UsageError("unsupported metric: lpips (it needs a pretrained network)");
    if (name != "position" && name != "psnr" && name != "ssim" && name != "dssim")
      throw UsageError("unsupported metric: " + name);
    if (name != "position") want_images = true;
  }
  if (metrics.empty()) throw UsageError("--metrics: no metrics requested");

  const GroundTruth pred = read_trajectory_csv(require_path(c, "trajectory", "--trajectory"));
  const fs::path truth_path = require_path(c, "truth", "--truth");
  std::optional<SceneFile> scene;
  GroundTruth truth;
  if (truth_path.extension() == ".csv") {
    truth = read_trajectory_csv(truth_path);
  } else {
    scene = load_scene(truth_path);
    if (!scene->truth) throw UsageError("--truth: the scene has no trajectories");
    truth = *scene->truth;
  }
  if (has(c, "scene")) scene = load_scene(get<std::string>(c, "scene"));
  if (want_images && !scene)
    throw UsageError("image metrics need Gaussian attributes: pass --scene or a scene as --truth");

  std::vector<double> observed;
  if (has(c, "train_manifest")) {
    const RunManifest tm = read_manifest(get<std::string>(c, "train_manifest"));
    if (!tm.extra.contains("supervised_times"))
      throw UsageError("--train-manifest: not a train manifest");
    observed = tm.extra["supervised_times"].get<std::vector<double>>();
  }
  auto is_observed = [&observed](double t) {
    return std::any_of(observed.begin(), observed.end(),
                       [t](double o) { return std::abs(o - t) <= 1e-9; });
  };

  struct Row {
    std::size_t frame;
    double time;
    std::string split;
    std::map<std::string, double> values;
  };
  std::vector<Row> rows;
  const CameraSpec camera = want_images ? camera_of(&*scene, c) : CameraSpec{};
  for (std::size_t p = 0; p < pred.frame_count(); ++p) {
    const double t = pred.times[p];
    std::size_t f = truth.frame_count();
    for (std::size_t k = 0; k < truth.frame_count(); ++k)
      if (std::abs(truth.times[k] - t) <= 1e-9) f = k;
    if (f == truth.frame_count())
      throw ValidationError("predicted time " + std::to_string(t) + " has no ground-truth frame");
    if (pred.positions[p].size() != truth.positions[f].size())
      throw ValidationError("frame " + std::to_string(f) + ": Gaussian counts differ");
    Row row{f, t, observed.empty() ? "-" : (is_observed(t) ? "observed" : "held-out"), {}};
    for (const auto& name : metrics) {
      if (name == "position") {
        double sum = 0.0;
        for (std::size_t i = 0; i < truth.positions[f].size(); ++i)
          sum += (pred.positions[p][i] - truth.positions[f][i]).norm();
        row.values[name] = sum / static_cast<double>(truth.positions[f].size());
      }
    }
    if (want_images) {
      const Image a = rasterize(with_positions(scene->cloud, pred.positions[p], t), camera);
      const Image b = rasterize(with_positions(scene->cloud, truth.positions[f], t), camera);
      for (const auto& name : metrics) {
        if (name == "psnr") row.values[name] = psnr(a, b);
        if (name == "ssim") row.values[name] = ssim(a, b);
        if (name == "dssim") row.values[name] = dssim(a, b);
      }
    }
    rows.push_back(std::move(row));
  }

  std::string csv = "frame_index,time,split";
  for (const auto& name : metrics) csv += "," + name;
  csv += "\n";
  char buf[64];
  auto fmt = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  log << "frame      time  split    ";
  for (const auto& name : metrics) log << " " << name;
  log << "\n";
  for (const auto& r : rows) {
    csv += std::to_string(r.frame) + "," + fmt(r.time) + "," + r.split;
    std::snprintf(buf, sizeof buf, "%5zu  %8.4f  %-8s", r.frame, r.time, r.split.c_str());
    log << buf;
    for (const auto& name : metrics) {
      csv += "," + fmt(r.values.at(name));
      std::snprintf(buf, sizeof buf, " %.6g", r.values.at(name));
      log << buf;
    }
    csv += "\n";
    log << "\n";
  }
  json means = json::object();
  for (const std::string group : {"all", "observed", "held-out"}) {
    std::map<std::string, double> sum;
    std::size_t count = 0;
    for (const auto& r : rows) {
      if (group != "all" && r.split != group) continue;
      ++count;
      for (const auto& name : metrics) sum[name] += r.values.at(name);
    }
    if (count == 0) continue;
    csv += "mean,," + group;
    log << " mean            " << group;
    for (const auto& name : metrics) {
      const double v = sum[name] / static_cast<double>(count);
      means[group][name] = v;
      csv += "," + fmt(v);
      std::snprintf(buf, sizeof buf, " %.6g", v);
      log << buf;
    }
    csv += "\n";
    log << "\n";
  }
  write_text_file(out / "metrics.csv", csv);
  RunManifest m;
  m.artifacts = {{"metrics.csv", ""}};
  m.extra = {{"means", means}, {"rows", rows.size()}};
  return m;
}

// ---------------------------------------------------------------------------
// Argument parsing

struct Registered {
  std::string command;
  CLI::App* app = nullptr;
  std::map<std::string, std::string> values;
  std::map<std::string, bool> flags;
  std::map<std::string, CLI::Option*> options;
  std::string config_file;
  std::string out = "flowsplat_out";
};

json resolve(Registered& r) {
  json config = default_config_impl(r.command);
  const std::vector<OptionSpec> specs = options_for(r.command);
  auto spec_for = [&specs](const std::string& key) -> const OptionSpec* {
    for (const auto& s : specs)
      if (key == s.key) return &s;
    return nullptr;
  };
  if (!r.config_file.empty()) {
    const json file = json_argument(r.config_file, "--config");
    if (!file.is_object()) throw UsageError("--config: expected a JSON object");
    for (const auto& [key, value] : file.items()) {
      if (!config.contains(key))
        throw UsageError("--config: unknown option '" + key + "' for " + r.command);
      const OptionSpec* s = spec_for(key);
      config[key] = s ? normalize_config_value(*s, value) : value;
    }
  }
  for (const auto& s : specs) {
    CLI::Option* opt = r.options.at(s.key);
    if (opt->count() == 0) continue;
    config[s.key] = s.kind == Kind::flag ? json(r.flags[s.key]) : convert(s, r.values[s.key]);
  }
  return config;
}

int run_impl(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Continuous-time Gaussian dynamics: simulate, train, inject, render, evaluate."};
  app.name("flowsplat");
  app.require_subcommand(1);

  std::vector<std::unique_ptr<Registered>> commands;
  for (const std::string& name : command_names()) {
    auto r = std::make_unique<Registered>();
    r->command = name;
    r->app = app.add_subcommand(name);
    r->app->add_option("--out", r->out, "output directory")->capture_default_str();
    r->app->add_option("--config", r->config_file, "JSON file with option values");
    for (const auto& s : options_for(name)) {
      CLI::Option* opt = s.kind == Kind::flag
                             ? r->app->add_flag(s.flag, r->flags[s.key], s.help)
                             : r->app->add_option(s.flag, r->values[s.key], s.help);
      r->options[s.key] = opt;
    }
    commands.push_back(std::move(r));
  }
  std::string manifest_path;
  std::string rerun_out = "flowsplat_rerun";
  bool verify = false;
  CLI::App* rerun = app.add_subcommand("rerun", "re-execute a run from its manifest");
  rerun->add_option("--manifest", manifest_path, "manifest.json of the original run")->required();
  rerun->add_option("--out", rerun_out, "output directory")->capture_default_str();
  rerun->add_flag("--verify", verify, "compare artifact hashes with the manifest");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (rerun->parsed()) {
    const RunManifest original = read_manifest(manifest_path);
    const RunManifest again = execute(original.command, original.config, rerun_out, out);
    if (!verify) return kExitOk;
    bool same = original.artifacts.size() == again.artifacts.size();
    for (std::size_t i = 0; same && i < original.artifacts.size(); ++i) {
      const bool match = original.artifacts[i].path == again.artifacts[i].path &&
                         original.artifacts[i].fnv1a64 == again.artifacts[i].fnv1a64;
      out << (match ? "match    " : "MISMATCH ") << original.artifacts[i].path << "\n";
      same = same && match;
    }
    out << (same ? "reproduced bitwise\n" : "outputs differ\n");
    return same ? kExitOk : kExitFailure;
  }
  for (auto& r : commands) {
    if (!r->app->parsed()) continue;
    const json config = resolve(*r);
    execute(r->command, config, r->out, out);
    return kExitOk;
  }
  return kExitUsage;
}

}  // namespace

json default_config(const std::string& command) { return default_config_impl(command); }

RunManifest execute(const std::string& command, const json& config, const fs::path& out_dir,
                    std::ostream& log) {
  fs::create_directories(out_dir);
  RunManifest m;
  if (command == "generate")
    m = cmd_generate(config, out_dir, log);
  else if (command == "train")
    m = cmd_train(config, out_dir, log);
  else if (command == "simulate")
    m = cmd_simulate(config, out_dir, log);
  else if (command == "inject")
    m = cmd_inject(config, out_dir, log);
  else if (command == "render")
    m = cmd_render(config, out_dir, log);
  else if (command == "eval")
    m = cmd_eval(config, out_dir, log);
  else
    throw UsageError("unknown command '" + command + "'");
  m.command = command;
  m.config = config;
  m.seed = config.contains("seed") ? config["seed"].get<std::uint64_t>() : 0;
  m.out_dir = fs::absolute(out_dir).lexically_normal().string();
  write_manifest(m, out_dir);
  return m;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return run_impl(args, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace flowsplat::cli
