#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "flowsplat/feature_grid.hpp"
#include "flowsplat/fields.hpp"
#include "flowsplat/knn.hpp"
#include "flowsplat/neural_field.hpp"
#include "flowsplat/scene.hpp"

namespace flowsplat {

// literal:  sum w_ij |xh_i - xh_j|^2 / (sum w_ij + eps)
// relative: sum w_ij |(xh_i - xh_j) - (x_i - x_j)|^2 / (sum w_ij + eps)
enum class CoherenceVariant { literal, relative };

std::string_view to_string(CoherenceVariant v);
std::optional<CoherenceVariant> coherence_variant_from_string(std::string_view name);

inline constexpr double kCoherenceEpsilon = 1e-8;

struct TrainingConfig {
  double lambda_coh = 0.01;
  double lambda_anchor = 0.1;
  double lambda_tv = 1e-4;
  double learning_rate = 3e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int epochs = 300;
  int frame_stride = 1;
  double train_fraction = 1.0;
  int neighbor_count = 8;
  double coherence_step = 0.01;
  int coherence_batch = 256;
  CoherenceVariant coherence_variant = CoherenceVariant::literal;
  // Integration resolution of the training unroll (steps per unit time).
  int steps_per_unit = 100;
  std::uint64_t seed = 0;
  GridConfig grid;
  MlpConfig mlp;
};

// Throws ValidationError naming the offending field.
void validate(const TrainingConfig& config);

struct LossReport {
  int epoch = 0;
  double total = 0.0;
  double data = 0.0;
  double coherence = 0.0;
  double anchor = 0.0;
  double tv = 0.0;
};

// total = data + lambda_coh * coherence + lambda_anchor * anchor + lambda_tv * tv.
// Throws NumericalError naming the first non-finite term.
LossReport total_loss(double data, double coherence, double anchor, double tv,
                      const TrainingConfig& config, int epoch = 0);

// Mean squared position error over frames x Gaussians. predicted[f][i] and
// truth[f][i]; throws ValidationError on a frame or Gaussian count mismatch.
double trajectory_data_loss(std::span<const std::vector<Eigen::Vector3d>> predicted,
                            std::span<const std::vector<Eigen::Vector3d>> truth);

// sigma = mean neighbor distance / 2. Throws NumericalError when it is zero.
double coherence_sigma(std::span<const Eigen::Vector3d> points, const NeighborLists& neighbors);

// Coherence term from canonical positions x and stepped positions xh, summed
// over i in `rows` (all points when empty) and j in neighbors[i]. When
// `d_stepped` is given it receives d value / d xh (same length as xh).
double coherence_value(std::span<const Eigen::Vector3d> x, std::span<const Eigen::Vector3d> xh,
                       const NeighborLists& neighbors, double sigma, CoherenceVariant variant,
                       std::span<const std::size_t> rows = {},
                       std::vector<Eigen::Vector3d>* d_stepped = nullptr);

// Integrates every Gaussian one RK4 step of size h from cloud.time under
// `field` and evaluates the coherence term.
double coherence_loss(const GaussianCloud& cloud, const NeighborLists& neighbors,
                      const VelocityField& field, double h,
                      CoherenceVariant variant = CoherenceVariant::literal);

}  // namespace flowsplat
