#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "flowsplat/scene.hpp"

namespace flowsplat {

// Plane order is fixed: xy, xz, yz, xt, yt, zt. For plane (a, b) the column
// coordinate comes from axis a and the row coordinate from axis b.
inline constexpr std::size_t kPlaneCount = 6;
inline constexpr std::array<std::string_view, kPlaneCount> kPlaneNames = {"xy", "xz", "yz",
                                                                           "xt", "yt", "zt"};

// Row-major feature storage: value(row, col, ch) = values[(row * cols + col) * channels + ch].
struct FeaturePlane {
  int rows = 0;
  int cols = 0;
  int channels = 0;
  std::vector<double> values;

  FeaturePlane() = default;
  FeaturePlane(int rows, int cols, int channels, double fill = 0.0);

  double& at(int row, int col, int ch) { return values[index(row, col, ch)]; }
  double at(int row, int col, int ch) const { return values[index(row, col, ch)]; }
  std::size_t index(int row, int col, int ch) const {
    return (static_cast<std::size_t>(row) * cols + col) * channels + ch;
  }
};

struct GridConfig {
  int spatial_resolution = 32;
  int time_resolution = 16;
  int channels = 8;
  double init_range = 0.1;
};

// Dense gradient with the same layout as the planes.
using GridGradient = std::array<std::vector<double>, kPlaneCount>;

struct LookupGradient {
  GridGradient planes;
  Eigen::Vector3d d_position = Eigen::Vector3d::Zero();
  double d_time = 0.0;
};

// Six factorized space-time feature planes, sampled bilinearly. Positions and
// times are clamped into the grid's box and time interval before sampling.
class HexPlaneGrid {
 public:
  HexPlaneGrid() = default;
  // Planes drawn uniformly from [-init_range, init_range] with a seeded generator.
  HexPlaneGrid(const Aabb& bounds, double t_min, double t_max, const GridConfig& config,
               std::uint64_t seed);
  HexPlaneGrid(const Aabb& bounds, double t_min, double t_max,
               std::array<FeaturePlane, kPlaneCount> planes);

  int channels() const { return planes_[0].channels; }
  std::size_t feature_size() const { return kPlaneCount * static_cast<std::size_t>(channels()); }
  const Aabb& bounds() const { return bounds_; }
  double t_min() const { return t_min_; }
  double t_max() const { return t_max_; }

  const FeaturePlane& plane(std::size_t i) const { return planes_[i]; }
  FeaturePlane& plane(std::size_t i) { return planes_[i]; }

  // Concatenation of the six plane samples in plane order.
  Eigen::VectorXd lookup(const Eigen::Vector3d& position, double t) const;
  void lookup_into(const Eigen::Vector3d& position, double t, double* out) const;

  // Exact gradients of <upstream, lookup(position, t)>.
  LookupGradient lookup_grad(const Eigen::Vector3d& position, double t,
                             const Eigen::Ref<const Eigen::VectorXd>& upstream) const;
  // Accumulates plane gradients into `grad` (which must match the planes'
  // shapes) and returns d/d position.
  Eigen::Vector3d accumulate_lookup_grad(const Eigen::Vector3d& position, double t,
                                         const double* upstream, GridGradient& grad) const;

  GridGradient zero_gradient() const;
  std::size_t parameter_count() const;
  void append_parameters(std::vector<double>& out) const;
  // Reads parameter_count() values starting at `data`.
  void assign_parameters(const double* data);

  nlohmann::json to_json() const;
  static HexPlaneGrid from_json(const nlohmann::json& j);

 private:
  void check_invariants() const;

  Aabb bounds_;
  double t_min_ = 0.0;
  double t_max_ = 1.0;
  std::array<FeaturePlane, kPlaneCount> planes_;
};

// Sum over planes of the mean squared difference between horizontally and
// vertically adjacent entries.
double tv_loss(const HexPlaneGrid& grid);
// Adds weight * d tv_loss / d planes into grad.
void accumulate_tv_grad(const HexPlaneGrid& grid, double weight, GridGradient& grad);

void append_gradient(const GridGradient& grad, std::vector<double>& out);

}  // namespace flowsplat
