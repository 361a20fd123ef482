#include "flowsplat/checkpoint.hpp"

#include <cstdio>
#include <set>
#include <string>

#include "flowsplat/error.hpp"
#include "flowsplat/scene_io.hpp"

namespace flowsplat {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "flowsplat-checkpoint-v1";

}  // namespace

json checkpoint_to_json(const NeuralVelocityField& field, const AnchorSet& anchors,
                        const json& training) {
  json j;
  j["format"] = kFormat;
  j["field"] = field.to_json();
  j["anchors"] = anchors.to_json();
  j["training"] = training;
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  if (!j.is_object() || j.value("format", std::string()) != kFormat)
    throw ParseError(std::string("checkpoint: missing or unknown format tag (expected ") + kFormat +
                     ")");
  try {
    return Checkpoint{NeuralVelocityField::from_json(j.at("field")),
                      AnchorSet::from_json(j.at("anchors")), j.value("training", json::object())};
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const NeuralVelocityField& field,
                     const AnchorSet& anchors, const json& training) {
  write_text_file(path, checkpoint_to_json(field, anchors, training).dump() + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

void write_loss_csv(const std::filesystem::path& path, std::span<const LossReport> history) {
  std::string text = "epoch,total,data,coherence,anchor,tv\n";
  char line[256];
  for (const auto& r : history) {
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.total,
                  r.data, r.coherence, r.anchor, r.tv);
    text += line;
  }
  write_text_file(path, text);
}

json training_config_to_json(const TrainingConfig& c) {
  return json{{"lambda_coh", c.lambda_coh},
              {"lambda_anchor", c.lambda_anchor},
              {"lambda_tv", c.lambda_tv},
              {"learning_rate", c.learning_rate},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"adam_epsilon", c.adam_epsilon},
              {"epochs", c.epochs},
              {"frame_stride", c.frame_stride},
              {"train_fraction", c.train_fraction},
              {"neighbor_count", c.neighbor_count},
              {"coherence_step", c.coherence_step},
              {"coherence_batch", c.coherence_batch},
              {"coherence_variant", std::string(to_string(c.coherence_variant))},
              {"steps_per_unit", c.steps_per_unit},
              {"seed", c.seed},
              {"grid",
               {{"spatial_resolution", c.grid.spatial_resolution},
                {"time_resolution", c.grid.time_resolution},
                {"channels", c.grid.channels},
                {"init_range", c.grid.init_range}}},
              {"mlp",
               {{"hidden", c.mlp.hidden},
                {"time_frequencies", c.mlp.time_frequencies},
                {"output_scale", c.mlp.output_scale}}}};
}

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ValidationError(where + ": unknown key '" + key + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(where + "." + key + ": wrong type");
  }
}

}  // namespace

TrainingConfig training_config_from_json(const json& j, TrainingConfig c) {
  const std::string where = "training";
  check_keys(j,
             {"lambda_coh", "lambda_anchor", "lambda_tv", "learning_rate", "beta1", "beta2",
              "adam_epsilon", "epochs", "frame_stride", "train_fraction", "neighbor_count",
              "coherence_step", "coherence_batch", "coherence_variant", "steps_per_unit", "seed",
              "grid", "mlp"},
             where);
  read(j, "lambda_coh", c.lambda_coh, where);
  read(j, "lambda_anchor", c.lambda_anchor, where);
  read(j, "lambda_tv", c.lambda_tv, where);
  read(j, "learning_rate", c.learning_rate, where);
  read(j, "beta1", c.beta1, where);
  read(j, "beta2", c.beta2, where);
  read(j, "adam_epsilon", c.adam_epsilon, where);
  read(j, "epochs", c.epochs, where);
  read(j, "frame_stride", c.frame_stride, where);
  read(j, "train_fraction", c.train_fraction, where);
  read(j, "neighbor_count", c.neighbor_count, where);
  read(j, "coherence_step", c.coherence_step, where);
  read(j, "coherence_batch", c.coherence_batch, where);
  read(j, "steps_per_unit", c.steps_per_unit, where);
  read(j, "seed", c.seed, where);
  if (j.contains("coherence_variant")) {
    std::string name;
    read(j, "coherence_variant", name, where);
    const auto v = coherence_variant_from_string(name);
    if (!v) throw ValidationError(where + ".coherence_variant: expected literal or relative");
    c.coherence_variant = *v;
  }
  if (j.contains("grid")) {
    const json& g = j["grid"];
    check_keys(g, {"spatial_resolution", "time_resolution", "channels", "init_range"},
               where + ".grid");
    read(g, "spatial_resolution", c.grid.spatial_resolution, where + ".grid");
    read(g, "time_resolution", c.grid.time_resolution, where + ".grid");
    read(g, "channels", c.grid.channels, where + ".grid");
    read(g, "init_range", c.grid.init_range, where + ".grid");
  }
  if (j.contains("mlp")) {
    const json& m = j["mlp"];
    check_keys(m, {"hidden", "time_frequencies", "output_scale"}, where + ".mlp");
    read(m, "hidden", c.mlp.hidden, where + ".mlp");
    read(m, "time_frequencies", c.mlp.time_frequencies, where + ".mlp");
    read(m, "output_scale", c.mlp.output_scale, where + ".mlp");
  }
  validate(c);
  return c;
}

}  // namespace flowsplat
