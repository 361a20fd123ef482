#include "flowsplat/losses.hpp"

#include <cmath>
#include <string>

#include "flowsplat/error.hpp"
#include "flowsplat/integrate.hpp"

namespace flowsplat {

std::string_view to_string(CoherenceVariant v) {
  return v == CoherenceVariant::literal ? "literal" : "relative";
}

std::optional<CoherenceVariant> coherence_variant_from_string(std::string_view name) {
  if (name == "literal") return CoherenceVariant::literal;
  if (name == "relative") return CoherenceVariant::relative;
  return std::nullopt;
}

void validate(const TrainingConfig& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(std::string("training config: ") + what);
  };
  require(c.lambda_coh >= 0.0, "lambda_coh must be >= 0");
  require(c.lambda_anchor >= 0.0, "lambda_anchor must be >= 0");
  require(c.lambda_tv >= 0.0, "lambda_tv must be >= 0");
  require(c.learning_rate > 0.0, "learning_rate must be > 0");
  require(c.beta1 >= 0.0 && c.beta1 < 1.0, "beta1 must lie in [0,1)");
  require(c.beta2 >= 0.0 && c.beta2 < 1.0, "beta2 must lie in [0,1)");
  require(c.adam_epsilon > 0.0, "adam_epsilon must be > 0");
  require(c.epochs >= 0, "epochs must be >= 0");
  require(c.frame_stride >= 1, "frame_stride must be >= 1");
  require(c.train_fraction > 0.0 && c.train_fraction <= 1.0, "train_fraction must lie in (0,1]");
  require(c.neighbor_count >= 1, "neighbor_count must be >= 1");
  require(c.coherence_step > 0.0, "coherence_step must be > 0");
  require(c.coherence_batch >= 1, "coherence_batch must be >= 1");
  require(c.steps_per_unit >= 1, "steps_per_unit must be >= 1");
  require(c.grid.spatial_resolution >= 1 && c.grid.time_resolution >= 1 && c.grid.channels >= 1,
          "grid resolutions and channels must be >= 1");
}

LossReport total_loss(double data, double coherence, double anchor, double tv,
                      const TrainingConfig& config, int epoch) {
  const std::pair<const char*, double> terms[] = {
      {"data", data}, {"coherence", coherence}, {"anchor", anchor}, {"tv", tv}};
  for (const auto& [name, value] : terms)
    if (!std::isfinite(value)) throw NumericalError(std::string("non-finite ") + name + " loss");
  LossReport r;
  r.epoch = epoch;
  r.data = data;
  r.coherence = coherence;
  r.anchor = anchor;
  r.tv = tv;
  r.total = data + config.lambda_coh * coherence + config.lambda_anchor * anchor +
            config.lambda_tv * tv;
  return r;
}

double trajectory_data_loss(std::span<const std::vector<Eigen::Vector3d>> predicted,
                            std::span<const std::vector<Eigen::Vector3d>> truth) {
  if (predicted.size() != truth.size())
    throw ValidationError("data loss: " + std::to_string(predicted.size()) +
                          " predicted frames for " + std::to_string(truth.size()) + " targets");
  if (predicted.empty()) throw ValidationError("data loss: no frames");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t f = 0; f < truth.size(); ++f) {
    if (predicted[f].size() != truth[f].size())
      throw ValidationError("data loss: Gaussian count mismatch in frame " + std::to_string(f));
    for (std::size_t i = 0; i < truth[f].size(); ++i)
      sum += (predicted[f][i] - truth[f][i]).squaredNorm();
    count += truth[f].size();
  }
  if (count == 0) throw ValidationError("data loss: empty frames");
  return sum / static_cast<double>(count);
}

double coherence_sigma(std::span<const Eigen::Vector3d> points, const NeighborLists& neighbors) {
  const double sigma = 0.5 * mean_neighbor_distance(points, neighbors);
  if (!(sigma > 0.0)) throw NumericalError("coherence: sigma is zero (coincident points)");
  return sigma;
}

double coherence_value(std::span<const Eigen::Vector3d> x, std::span<const Eigen::Vector3d> xh,
                       const NeighborLists& neighbors, double sigma, CoherenceVariant variant,
                       std::span<const std::size_t> rows,
                       std::vector<Eigen::Vector3d>* d_stepped) {
  if (x.size() != xh.size() || neighbors.size() != x.size())
    throw ValidationError("coherence: position and neighbor list sizes differ");
  if (!(sigma > 0.0)) throw NumericalError("coherence: sigma is zero (coincident points)");
  std::vector<std::size_t> all;
  if (rows.empty()) {
    all.resize(x.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    rows = all;
  }

  double num = 0.0;
  double den = 0.0;
  for (std::size_t i : rows)
    for (std::size_t j : neighbors[i]) {
      const double w = std::exp(-(x[i] - x[j]).norm() / sigma);
      Eigen::Vector3d diff = xh[i] - xh[j];
      if (variant == CoherenceVariant::relative) diff -= x[i] - x[j];
      num += w * diff.squaredNorm();
      den += w;
    }
  const double denom = den + kCoherenceEpsilon;

  if (d_stepped) {
    d_stepped->assign(xh.size(), Eigen::Vector3d::Zero());
    for (std::size_t i : rows)
      for (std::size_t j : neighbors[i]) {
        const double w = std::exp(-(x[i] - x[j]).norm() / sigma);
        Eigen::Vector3d diff = xh[i] - xh[j];
        if (variant == CoherenceVariant::relative) diff -= x[i] - x[j];
        const Eigen::Vector3d g = (2.0 * w / denom) * diff;
        (*d_stepped)[i] += g;
        (*d_stepped)[j] -= g;
      }
  }
  return num / denom;
}

double coherence_loss(const GaussianCloud& cloud, const NeighborLists& neighbors,
                      const VelocityField& field, double h, CoherenceVariant variant) {
  if (!(h > 0.0)) throw ValidationError("coherence: step h must be > 0");
  const std::vector<Eigen::Vector3d> x = positions_of(cloud);
  std::vector<Eigen::Vector3d> xh(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    xh[i] = rk4_step(cloud.gaussians[i], Eigen::Vector3d::Zero(), cloud.time, h, field, i, 0)
                .state.position;
  return coherence_value(x, xh, neighbors, coherence_sigma(x, neighbors), variant);
}

}  // namespace flowsplat
