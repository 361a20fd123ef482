#include "flowsplat/train.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "flowsplat/error.hpp"
#include "flowsplat/integrate.hpp"
#include "flowsplat/unroll.hpp"

namespace flowsplat {

std::vector<std::size_t> supervised_frames(const GroundTruth& truth, int frame_stride,
                                           double train_fraction) {
  if (frame_stride < 1) throw ValidationError("frame_stride must be >= 1");
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < truth.frame_count(); f += static_cast<std::size_t>(frame_stride))
    if (truth.times[f] <= train_fraction + 1e-12) out.push_back(f);
  return out;
}

TrainingProblem make_problem(const GaussianCloud& cloud, const GroundTruth& truth,
                             const TrainingConfig& config) {
  validate(config);
  if (truth.positions.size() != truth.times.size())
    throw ValidationError("ground truth: times and position frames differ in count");
  for (std::size_t f = 0; f < truth.frame_count(); ++f) {
    if (truth.positions[f].size() != cloud.size())
      throw ValidationError("ground truth: frame " + std::to_string(f) + " has " +
                            std::to_string(truth.positions[f].size()) + " positions for " +
                            std::to_string(cloud.size()) + " Gaussians");
    if (f > 0 && !(truth.times[f] > truth.times[f - 1]))
      throw ValidationError("ground truth: times must increase");
  }
  if (cloud.size() == 0) throw ValidationError("training needs at least one Gaussian");

  TrainingProblem p;
  p.frames = supervised_frames(truth, config.frame_stride, config.train_fraction);
  if (p.frames.size() < 2)
    throw ValidationError("training needs at least 2 supervised frames, got " +
                          std::to_string(p.frames.size()));
  for (std::size_t f : p.frames) {
    p.times.push_back(truth.times[f]);
    p.targets.push_back(truth.positions[f]);
  }
  p.t_begin = p.times.front();
  p.t_end = p.times.back();
  p.canonical = cloud_at_frame(cloud, truth, p.frames.front());
  p.canonical.time = p.t_begin;

  // Start, the supervised frame nearest the window midpoint, and the end.
  const double mid_time = 0.5 * (p.t_begin + p.t_end);
  std::size_t mid = 0;
  for (std::size_t k = 1; k < p.times.size(); ++k)
    if (std::abs(p.times[k] - mid_time) < std::abs(p.times[mid] - mid_time)) mid = k;
  std::vector<std::size_t> anchor_slots{0};
  if (mid != 0 && mid + 1 != p.times.size()) anchor_slots.push_back(mid);
  if (config.train_fraction >= 1.0) anchor_slots.push_back(p.times.size() - 1);
  for (std::size_t k : anchor_slots) {
    GaussianCloud a = cloud_at_frame(cloud, truth, p.frames[k]);
    a.time = p.times[k];
    p.anchors.snapshot(a, p.times[k]);
  }

  const std::vector<Eigen::Vector3d> x = positions_of(p.canonical);
  if (x.size() >= 2) {
    const std::size_t k =
        std::min(static_cast<std::size_t>(config.neighbor_count), x.size() - 1);
    p.neighbors = knn(x, k);
    p.sigma = coherence_sigma(x, p.neighbors);
  }

  Aabb box{p.targets.front().front(), p.targets.front().front()};
  for (const auto& frame : p.targets)
    for (const auto& q : frame) box = box.expanded(q);
  const double margin = std::max(0.05 * box.extent().maxCoeff(), 1e-3);
  box.min.array() -= margin;
  box.max.array() += margin;
  p.grid_bounds = box;
  return p;
}

NeuralVelocityField initial_field(const TrainingProblem& problem, const TrainingConfig& config) {
  HexPlaneGrid grid(problem.grid_bounds, problem.t_begin, problem.t_end, config.grid, config.seed);
  return NeuralVelocityField(std::move(grid), config.mlp, config.seed + 1);
}

std::vector<std::size_t> coherence_rows(std::size_t n, const TrainingConfig& config, int epoch) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  const auto batch = static_cast<std::size_t>(config.coherence_batch);
  if (n <= batch) return idx;
  std::mt19937_64 gen(config.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(epoch) + 1);
  // Partial Fisher-Yates with an explicit index draw so the subset does not
  // depend on the standard library's distribution implementation.
  for (std::size_t i = 0; i < batch; ++i) {
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    const std::size_t j = i + static_cast<std::size_t>(u * static_cast<double>(n - i));
    std::swap(idx[i], idx[std::min(j, n - 1)]);
  }
  idx.resize(batch);
  std::sort(idx.begin(), idx.end());
  return idx;
}

namespace {

BatchState subset(const BatchState& b, const std::vector<std::size_t>& cols) {
  BatchState out = BatchState::zeros(static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const auto c = static_cast<Eigen::Index>(cols[k]);
    out.position.col(static_cast<Eigen::Index>(k)) = b.position.col(c);
    out.rotation.col(static_cast<Eigen::Index>(k)) = b.rotation.col(c);
    out.log_scale.col(static_cast<Eigen::Index>(k)) = b.log_scale.col(c);
  }
  return out;
}

}  // namespace

Evaluation evaluate_objective(const NeuralVelocityField& field, const TrainingProblem& problem,
                              const TrainingConfig& config, std::span<const std::size_t> rows,
                              bool with_gradient, int epoch) {
  const auto& anchors = problem.anchors.anchors();
  const std::size_t n = problem.canonical.size();
  const double frame_norm = 1.0 / static_cast<double>(problem.times.size() * n);
  NeuralGradients grads = field.zero_gradients();

  double data = 0.0;
  double anchor = 0.0;
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    const double start = anchors[a].time;
    const double end = a + 1 < anchors.size() ? anchors[a + 1].time : problem.t_end;
    if (!(end > start)) continue;
    UnrolledRollout unroll(field, batch_from_cloud(anchors[a].cloud), start);
    std::vector<BatchState> adjoints;
    double t_prev = start;
    for (std::size_t f = 0; f < problem.times.size(); ++f) {
      const double t = problem.times[f];
      if (!(t > start) || t > end) continue;
      const BatchState& s =
          unroll.advance_to(t, steps_for_span(t - t_prev, config.steps_per_unit));
      t_prev = t;
      BatchState adj = BatchState::zeros(static_cast<Eigen::Index>(n));
      const bool at_anchor = a + 1 < anchors.size() && t == end;
      if (at_anchor) {
        // The anchor snapshot is what a query at this time returns, so the
        // frame's data residual is zero; the integrated state enters L_anchor.
        const GaussianCloud& target = anchors[a + 1].cloud;
        for (std::size_t i = 0; i < n; ++i) {
          GaussianState g = target.gaussians[i];
          const auto c = static_cast<Eigen::Index>(i);
          g.position = s.position.col(c);
          g.rotation = rotation::from_vec(s.rotation.col(c));
          g.log_scale = s.log_scale.col(c);
          const AnchorTermGradient term = anchor_term_gradient(g, target.gaussians[i]);
          anchor += term.value;
          adj.position.col(c) = config.lambda_anchor * term.d_position;
          adj.rotation.col(c) = config.lambda_anchor * term.d_rotation;
          adj.log_scale.col(c) = config.lambda_anchor * term.d_log_scale;
        }
      } else {
        for (std::size_t i = 0; i < n; ++i) {
          const auto c = static_cast<Eigen::Index>(i);
          const Eigen::Vector3d r = s.position.col(c) - problem.targets[f][i];
          data += r.squaredNorm() * frame_norm;
          adj.position.col(c) = 2.0 * frame_norm * r;
        }
      }
      adjoints.push_back(std::move(adj));
    }
    if (with_gradient && !adjoints.empty()) unroll.backward(adjoints, grads);
  }

  double coherence = 0.0;
  if (!problem.neighbors.empty()) {
    std::vector<std::size_t> used(rows.begin(), rows.end());
    if (used.empty())
      for (std::size_t i = 0; i < n; ++i) used.push_back(i);
    for (std::size_t i : rows) used.insert(used.end(), problem.neighbors[i].begin(),
                                           problem.neighbors[i].end());
    std::sort(used.begin(), used.end());
    used.erase(std::unique(used.begin(), used.end()), used.end());

    const BatchState full = batch_from_cloud(problem.canonical);
    UnrolledRollout unroll(field, subset(full, used), problem.canonical.time);
    const BatchState& stepped = unroll.advance_to(problem.canonical.time + config.coherence_step, 1);
    const std::vector<Eigen::Vector3d> x = positions_of(problem.canonical);
    std::vector<Eigen::Vector3d> xh = x;
    for (std::size_t k = 0; k < used.size(); ++k)
      xh[used[k]] = stepped.position.col(static_cast<Eigen::Index>(k));
    std::vector<Eigen::Vector3d> d_xh;
    coherence = coherence_value(x, xh, problem.neighbors, problem.sigma,
                                config.coherence_variant, rows, with_gradient ? &d_xh : nullptr);
    if (with_gradient) {
      BatchState adj = BatchState::zeros(static_cast<Eigen::Index>(used.size()));
      for (std::size_t k = 0; k < used.size(); ++k)
        adj.position.col(static_cast<Eigen::Index>(k)) = config.lambda_coh * d_xh[used[k]];
      unroll.backward({adj}, grads);
    }
  }

  const double tv = tv_loss(field.grid());
  if (with_gradient) accumulate_tv_grad(field.grid(), config.lambda_tv, grads.grid);

  Evaluation out;
  out.report = total_loss(data, coherence, anchor, tv, config, epoch);
  if (with_gradient) out.gradient = grads.flatten();
  return out;
}

}  // namespace flowsplat
