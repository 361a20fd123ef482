#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "flowsplat/anchors.hpp"
#include "flowsplat/knn.hpp"
#include "flowsplat/losses.hpp"
#include "flowsplat/neural_field.hpp"
#include "flowsplat/scene.hpp"

namespace flowsplat {

// Supervision extracted from a scene: every frame_stride-th frame with
// t <= train_fraction. Anchors hold ground-truth positions (rotation, scale,
// color and opacity come from the scene cloud) at the start, middle and end of
// the training window; the end anchor is omitted when train_fraction < 1.
struct TrainingProblem {
  GaussianCloud canonical;  // state at the first supervised time
  std::vector<std::size_t> frames;  // indices into the scene's frames
  std::vector<double> times;
  std::vector<std::vector<Eigen::Vector3d>> targets;
  AnchorSet anchors;
  NeighborLists neighbors;  // on canonical positions; empty for a single Gaussian
  double sigma = 0.0;
  Aabb grid_bounds;
  double t_begin = 0.0;
  double t_end = 1.0;
};

// Throws ValidationError when fewer than two frames survive the filtering.
TrainingProblem make_problem(const GaussianCloud& cloud, const GroundTruth& truth,
                             const TrainingConfig& config);

// Frame indices kept by the stride / fraction protocol.
std::vector<std::size_t> supervised_frames(const GroundTruth& truth, int frame_stride,
                                           double train_fraction);

// Fresh field for a problem: grid over its bounds and time window.
NeuralVelocityField initial_field(const TrainingProblem& problem, const TrainingConfig& config);

// Seeded subset of at most config.coherence_batch Gaussians, sorted.
std::vector<std::size_t> coherence_rows(std::size_t n, const TrainingConfig& config, int epoch);

struct Evaluation {
  LossReport report;
  std::vector<double> gradient;  // flat, parameter order of the field; empty if not requested
};

// Total training loss and (optionally) its exact gradient. Each anchor
// segment is one RK4 unroll from its anchor through the supervised times up
// to the next anchor (or the end of the window).
Evaluation evaluate_objective(const NeuralVelocityField& field, const TrainingProblem& problem,
                              const TrainingConfig& config, std::span<const std::size_t> rows,
                              bool with_gradient, int epoch = 0);

struct FitResult {
  NeuralVelocityField field;
  AnchorSet anchors;
  std::vector<LossReport> history;  // one entry per epoch, loss before the update
  std::vector<std::size_t> frames;  // supervised frame indices
};

using ProgressCallback = std::function<void(const LossReport&)>;

// Adam on the full objective for config.epochs epochs. Deterministic for a
// fixed config (seed included).
FitResult fit(const GaussianCloud& cloud, const GroundTruth& truth, const TrainingConfig& config,
              const ProgressCallback& progress = {});

}  // namespace flowsplat
