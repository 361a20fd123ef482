#pragma once

#include <filesystem>
#include <span>

#include <json.hpp>

#include "flowsplat/anchors.hpp"
#include "flowsplat/losses.hpp"
#include "flowsplat/neural_field.hpp"

namespace flowsplat {

// Checkpoint bundle: {"format": "flowsplat-checkpoint-v1", "field": <mlp + grid>,
// "anchors": [...], "training": {...}}. The training block is free-form
// metadata (config snapshot, supervised frames).
struct Checkpoint {
  NeuralVelocityField field;
  AnchorSet anchors;
  nlohmann::json training;
};

nlohmann::json checkpoint_to_json(const NeuralVelocityField& field, const AnchorSet& anchors,
                                  const nlohmann::json& training = nlohmann::json::object());
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const NeuralVelocityField& field,
                     const AnchorSet& anchors,
                     const nlohmann::json& training = nlohmann::json::object());
// Missing file -> UsageError; malformed -> ParseError.
Checkpoint load_checkpoint(const std::filesystem::path& path);

// CSV with header epoch,total,data,coherence,anchor,tv.
void write_loss_csv(const std::filesystem::path& path, std::span<const LossReport> history);

nlohmann::json training_config_to_json(const TrainingConfig& config);
// Unknown keys -> ValidationError; missing keys keep the defaults of `base`.
TrainingConfig training_config_from_json(const nlohmann::json& j, TrainingConfig base = {});

}  // namespace flowsplat
