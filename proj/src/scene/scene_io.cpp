#include "flowsplat/scene_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "flowsplat/error.hpp"

namespace flowsplat {

using nlohmann::json;

namespace {

double number_at(const json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError(where + ": expected a number");
  return j.get<double>();
}

const json& member(const json& j, const char* key, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(where + "." + key + ": missing");
  return *it;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

json vec3_to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d vec3_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw ParseError(where + ": expected an array of 3 numbers");
  return {number_at(j[0], where + "[0]"), number_at(j[1], where + "[1]"),
          number_at(j[2], where + "[2]")};
}

json gaussian_to_json(const GaussianState& g) {
  return json{{"position", vec3_to_json(g.position)},
              {"rotation", json::array({g.rotation.w(), g.rotation.x(), g.rotation.y(),
                                        g.rotation.z()})},
              {"log_scale", vec3_to_json(g.log_scale)},
              {"color", vec3_to_json(g.color)},
              {"opacity", g.opacity}};
}

GaussianState gaussian_from_json(const json& j, const std::string& where) {
  GaussianState g;
  g.position = vec3_from_json(member(j, "position", where), where + ".position");
  const json& r = member(j, "rotation", where);
  if (!r.is_array() || r.size() != 4)
    throw ParseError(where + ".rotation: expected [w, x, y, z]");
  Eigen::Quaterniond q(number_at(r[0], where + ".rotation"), number_at(r[1], where + ".rotation"),
                       number_at(r[2], where + ".rotation"), number_at(r[3], where + ".rotation"));
  const double n = q.norm();
  if (!std::isfinite(n) || n < 1e-12)
    throw ValidationError(where + ".rotation: zero or non-finite quaternion");
  if (std::abs(n - 1.0) > 1e-12) q.coeffs() /= n;
  g.rotation = q;
  g.log_scale = vec3_from_json(member(j, "log_scale", where), where + ".log_scale");
  g.color = vec3_from_json(member(j, "color", where), where + ".color");
  g.opacity = number_at(member(j, "opacity", where), where + ".opacity");
  return g;
}

json camera_to_json(const CameraSpec& c) {
  return json{{"eye", vec3_to_json(c.eye)},       {"look_at", vec3_to_json(c.look_at)},
              {"up", vec3_to_json(c.up)},         {"vertical_fov", c.vertical_fov},
              {"width", c.width},                 {"height", c.height},
              {"near", c.near}};
}

CameraSpec camera_from_json(const json& j, const std::string& where) {
  CameraSpec c;
  c.eye = vec3_from_json(member(j, "eye", where), where + ".eye");
  c.look_at = vec3_from_json(member(j, "look_at", where), where + ".look_at");
  c.up = vec3_from_json(member(j, "up", where), where + ".up");
  c.vertical_fov = number_at(member(j, "vertical_fov", where), where + ".vertical_fov");
  const json& w = member(j, "width", where);
  const json& h = member(j, "height", where);
  if (!w.is_number_integer() || !h.is_number_integer())
    throw ParseError(where + ": width and height must be integers");
  c.width = w.get<int>();
  c.height = h.get<int>();
  if (j.contains("near")) c.near = number_at(j["near"], where + ".near");
  try {
    validate(c);
  } catch (const ValidationError& e) {
    throw ValidationError(where + ": " + e.what());
  }
  return c;
}

SceneFile parse_scene(const json& doc) {
  if (!doc.is_object()) throw ParseError("scene: expected a JSON object");
  SceneFile scene;

  if (doc.contains("bounds")) {
    const json& b = doc["bounds"];
    scene.cloud.bounds.min = vec3_from_json(member(b, "min", "bounds"), "bounds.min");
    scene.cloud.bounds.max = vec3_from_json(member(b, "max", "bounds"), "bounds.max");
    if ((scene.cloud.bounds.min.array() > scene.cloud.bounds.max.array()).any())
      throw ValidationError("bounds: min exceeds max");
  }
  if (doc.contains("time")) scene.cloud.time = number_at(doc["time"], "time");

  const json& gs = member(doc, "gaussians", "scene");
  if (!gs.is_array()) throw ParseError("gaussians: expected an array");
  for (std::size_t i = 0; i < gs.size(); ++i) {
    const std::string where = "gaussians[" + std::to_string(i) + "]";
    GaussianState g = gaussian_from_json(gs[i], where);
    validate(g, i);
    scene.cloud.gaussians.push_back(g);
  }
  scene.cloud.refit_bounds();

  if (doc.contains("cameras")) {
    const json& cams = doc["cameras"];
    if (!cams.is_array()) throw ParseError("cameras: expected an array");
    for (std::size_t i = 0; i < cams.size(); ++i)
      scene.cameras.push_back(camera_from_json(cams[i], "cameras[" + std::to_string(i) + "]"));
  }

  if (doc.contains("knn_k")) {
    const json& k = doc["knn_k"];
    if (!k.is_number_integer() || k.get<long long>() <= 0)
      throw ValidationError("knn_k: must be a positive integer");
    scene.neighbor_count = k.get<std::size_t>();
  }

  if (doc.contains("trajectories") && !doc["trajectories"].is_null()) {
    const json& tr = doc["trajectories"];
    const json& times = member(tr, "times", "trajectories");
    const json& pos = member(tr, "positions", "trajectories");
    if (!times.is_array() || !pos.is_array())
      throw ParseError("trajectories: times and positions must be arrays");
    if (times.size() != pos.size())
      throw ValidationError("trajectories: times and positions have different frame counts");
    GroundTruth truth;
    for (std::size_t f = 0; f < times.size(); ++f) {
      const std::string where = "trajectories.times[" + std::to_string(f) + "]";
      truth.times.push_back(number_at(times[f], where));
      if (f > 0 && !(truth.times[f] > truth.times[f - 1]))
        throw ValidationError(where + ": times must be strictly increasing");
      const json& frame = pos[f];
      const std::string fwhere = "trajectories.positions[" + std::to_string(f) + "]";
      if (!frame.is_array()) throw ParseError(fwhere + ": expected an array");
      if (frame.size() != scene.cloud.size())
        throw ValidationError(fwhere + ": expected " + std::to_string(scene.cloud.size()) +
                              " positions, found " + std::to_string(frame.size()));
      std::vector<Eigen::Vector3d> row;
      row.reserve(frame.size());
      for (std::size_t i = 0; i < frame.size(); ++i) {
        row.push_back(vec3_from_json(frame[i], fwhere + "[" + std::to_string(i) + "]"));
        if (!row.back().allFinite())
          throw ValidationError(fwhere + "[" + std::to_string(i) + "]: not finite");
        scene.cloud.bounds = scene.cloud.bounds.expanded(row.back());
      }
      truth.positions.push_back(std::move(row));
    }
    scene.truth = std::move(truth);
  }

  if (doc.contains("field") && !doc["field"].is_null()) scene.field = doc["field"];

  if (doc.contains("velocities") && !doc["velocities"].is_null()) {
    const json& vs = doc["velocities"];
    if (!vs.is_array()) throw ParseError("velocities: expected an array");
    if (vs.size() != scene.cloud.size())
      throw ValidationError("velocities: expected " + std::to_string(scene.cloud.size()) +
                            " entries, found " + std::to_string(vs.size()));
    std::vector<Eigen::Vector3d> v;
    for (std::size_t i = 0; i < vs.size(); ++i)
      v.push_back(vec3_from_json(vs[i], "velocities[" + std::to_string(i) + "]"));
    scene.velocities = std::move(v);
  }
  return scene;
}

SceneFile load_scene(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw UsageError("scene file not found: " + path.string());
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return parse_scene(doc);
}

json scene_to_json(const SceneFile& scene) {
  json doc;
  doc["bounds"] = {{"min", vec3_to_json(scene.cloud.bounds.min)},
                   {"max", vec3_to_json(scene.cloud.bounds.max)}};
  doc["time"] = scene.cloud.time;
  doc["knn_k"] = scene.neighbor_count;
  doc["gaussians"] = json::array();
  for (const auto& g : scene.cloud.gaussians) doc["gaussians"].push_back(gaussian_to_json(g));
  doc["cameras"] = json::array();
  for (const auto& c : scene.cameras) doc["cameras"].push_back(camera_to_json(c));
  if (scene.truth) {
    json tr;
    tr["times"] = scene.truth->times;
    tr["positions"] = json::array();
    for (const auto& frame : scene.truth->positions) {
      json row = json::array();
      for (const auto& p : frame) row.push_back(vec3_to_json(p));
      tr["positions"].push_back(std::move(row));
    }
    doc["trajectories"] = std::move(tr);
  }
  if (scene.field) doc["field"] = *scene.field;
  if (scene.velocities) {
    doc["velocities"] = json::array();
    for (const auto& v : *scene.velocities) doc["velocities"].push_back(vec3_to_json(v));
  }
  return doc;
}

void save_scene(const SceneFile& scene, const std::filesystem::path& path) {
  write_text_file(path, scene_to_json(scene).dump(1) + "\n");
}

void write_trajectory_csv(const std::filesystem::path& path, const std::vector<double>& times,
                          const std::vector<std::vector<Eigen::Vector3d>>& positions) {
  if (times.size() != positions.size())
    throw ValidationError("trajectory: times and frames differ in length");
  std::string text = "frame_index,time,gaussian_index,x,y,z\n";
  char line[256];
  for (std::size_t f = 0; f < times.size(); ++f) {
    for (std::size_t i = 0; i < positions[f].size(); ++i) {
      const auto& p = positions[f][i];
      std::snprintf(line, sizeof line, "%zu,%.17g,%zu,%.17g,%.17g,%.17g\n", f, times[f], i, p.x(),
                    p.y(), p.z());
      text += line;
    }
  }
  write_text_file(path, text);
}

GroundTruth read_trajectory_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || line.rfind("frame_index", 0) != 0)
    throw ParseError(path.string() + ": missing trajectory CSV header");
  GroundTruth truth;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::size_t frame, index;
    double t, x, y, z;
    if (std::sscanf(line.c_str(), "%zu,%lf,%zu,%lf,%lf,%lf", &frame, &t, &index, &x, &y, &z) != 6)
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": malformed row");
    if (frame == truth.times.size()) {
      truth.times.push_back(t);
      truth.positions.emplace_back();
    } else if (frame + 1 != truth.times.size()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": frames out of order");
    }
    if (index != truth.positions.back().size())
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": gaussian_index out of order");
    truth.positions.back().emplace_back(x, y, z);
  }
  return truth;
}

}  // namespace flowsplat
