#include "flowsplat/feature_grid.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "flowsplat/error.hpp"
#include "flowsplat/scene_io.hpp"

namespace flowsplat {

namespace {

// (column axis, row axis); axis 3 is time.
constexpr std::array<std::array<int, 2>, kPlaneCount> kPlaneAxes = {
    {{0, 1}, {0, 2}, {1, 2}, {0, 3}, {1, 3}, {2, 3}}};

struct AxisCoord {
  double u;      // continuous node coordinate in [0, n-1]
  double du_dx;  // zero when the input was clamped
};

AxisCoord normalize(double x, double lo, double hi, int nodes) {
  if (nodes <= 1 || !(hi > lo)) return {0.0, 0.0};
  const double scale = (nodes - 1) / (hi - lo);
  if (x < lo) return {0.0, 0.0};
  if (x > hi) return {static_cast<double>(nodes - 1), 0.0};
  return {(x - lo) * scale, scale};
}

struct Cell {
  int i0, i1;
  double f;
};

Cell locate(double u, int nodes) {
  if (nodes <= 1) return {0, 0, 0.0};
  int i0 = static_cast<int>(std::floor(u));
  i0 = std::clamp(i0, 0, nodes - 2);
  return {i0, i0 + 1, u - i0};
}

struct PlaneSample {
  Cell col, row;
  double dcol_dx, drow_dx;
  int col_axis, row_axis;
};

double uniform_unit(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace

FeaturePlane::FeaturePlane(int rows_, int cols_, int channels_, double fill)
    : rows(rows_), cols(cols_), channels(channels_),
      values(static_cast<std::size_t>(rows_) * cols_ * channels_, fill) {}

HexPlaneGrid::HexPlaneGrid(const Aabb& bounds, double t_min, double t_max,
                           const GridConfig& config, std::uint64_t seed)
    : bounds_(bounds), t_min_(t_min), t_max_(t_max) {
  std::mt19937_64 gen(seed);
  for (std::size_t p = 0; p < kPlaneCount; ++p) {
    const bool temporal = kPlaneAxes[p][1] == 3;
    const int rows = temporal ? config.time_resolution : config.spatial_resolution;
    planes_[p] = FeaturePlane(rows, config.spatial_resolution, config.channels);
    for (double& v : planes_[p].values) v = config.init_range * (2.0 * uniform_unit(gen) - 1.0);
  }
  check_invariants();
}

HexPlaneGrid::HexPlaneGrid(const Aabb& bounds, double t_min, double t_max,
                           std::array<FeaturePlane, kPlaneCount> planes)
    : bounds_(bounds), t_min_(t_min), t_max_(t_max), planes_(std::move(planes)) {
  check_invariants();
}

void HexPlaneGrid::check_invariants() const {
  const int ch = planes_[0].channels;
  if (ch <= 0) throw ValidationError("grid: channel count must be positive");
  for (std::size_t p = 0; p < kPlaneCount; ++p) {
    const auto& pl = planes_[p];
    const std::string name = "grid.planes." + std::string(kPlaneNames[p]);
    if (pl.channels != ch) throw ValidationError(name + ": channel count differs from plane xy");
    if (pl.rows <= 0 || pl.cols <= 0) throw ValidationError(name + ": empty plane");
    if (pl.values.size() != static_cast<std::size_t>(pl.rows) * pl.cols * pl.channels)
      throw ValidationError(name + ": value count does not match its shape");
    for (double v : pl.values)
      if (!std::isfinite(v)) throw ValidationError(name + ": non-finite entry");
  }
  if (!(t_max_ >= t_min_)) throw ValidationError("grid: empty time interval");
}

namespace {

PlaneSample sample_coords(const FeaturePlane& pl, std::size_t p, const Eigen::Vector3d& pos,
                          double t, const Aabb& b, double t_min, double t_max) {
  auto coord = [&](int axis, int nodes) {
    if (axis == 3) return normalize(t, t_min, t_max, nodes);
    return normalize(pos[axis], b.min[axis], b.max[axis], nodes);
  };
  const int ca = kPlaneAxes[p][0], ra = kPlaneAxes[p][1];
  const AxisCoord cu = coord(ca, pl.cols);
  const AxisCoord ru = coord(ra, pl.rows);
  return {locate(cu.u, pl.cols), locate(ru.u, pl.rows), cu.du_dx, ru.du_dx, ca, ra};
}

void check_query(const Eigen::Vector3d& position, double t) {
  if (!position.allFinite() || !std::isfinite(t))
    throw NumericalError("grid lookup: non-finite query");
}

}  // namespace

void HexPlaneGrid::lookup_into(const Eigen::Vector3d& position, double t, double* out) const {
  check_query(position, t);
  const int ch = channels();
  for (std::size_t p = 0; p < kPlaneCount; ++p) {
    const FeaturePlane& pl = planes_[p];
    const PlaneSample s = sample_coords(pl, p, position, t, bounds_, t_min_, t_max_);
    const double w00 = (1 - s.col.f) * (1 - s.row.f), w01 = s.col.f * (1 - s.row.f);
    const double w10 = (1 - s.col.f) * s.row.f, w11 = s.col.f * s.row.f;
    const double* v00 = &pl.values[pl.index(s.row.i0, s.col.i0, 0)];
    const double* v01 = &pl.values[pl.index(s.row.i0, s.col.i1, 0)];
    const double* v10 = &pl.values[pl.index(s.row.i1, s.col.i0, 0)];
    const double* v11 = &pl.values[pl.index(s.row.i1, s.col.i1, 0)];
    double* o = out + p * ch;
    for (int c = 0; c < ch; ++c) o[c] = w00 * v00[c] + w01 * v01[c] + w10 * v10[c] + w11 * v11[c];
  }
}

Eigen::VectorXd HexPlaneGrid::lookup(const Eigen::Vector3d& position, double t) const {
  Eigen::VectorXd out(feature_size());
  lookup_into(position, t, out.data());
  return out;
}

GridGradient HexPlaneGrid::zero_gradient() const {
  GridGradient g;
  for (std::size_t p = 0; p < kPlaneCount; ++p) g[p].assign(planes_[p].values.size(), 0.0);
  return g;
}

Eigen::Vector3d HexPlaneGrid::accumulate_lookup_grad(const Eigen::Vector3d& position, double t,
                                                     const double* upstream,
                                                     GridGradient& grad) const {
  check_query(position, t);
  const int ch = channels();
  Eigen::Vector4d d_coords = Eigen::Vector4d::Zero();  // x, y, z, t
  for (std::size_t p = 0; p < kPlaneCount; ++p) {
    const FeaturePlane& pl = planes_[p];
    const PlaneSample s = sample_coords(pl, p, position, t, bounds_, t_min_, t_max_);
    const double fc = s.col.f, fr = s.row.f;
    const double w00 = (1 - fc) * (1 - fr), w01 = fc * (1 - fr);
    const double w10 = (1 - fc) * fr, w11 = fc * fr;
    const std::size_t i00 = pl.index(s.row.i0, s.col.i0, 0);
    const std::size_t i01 = pl.index(s.row.i0, s.col.i1, 0);
    const std::size_t i10 = pl.index(s.row.i1, s.col.i0, 0);
    const std::size_t i11 = pl.index(s.row.i1, s.col.i1, 0);
    const double* g = upstream + p * ch;
    auto& acc = grad[p];
    double d_col = 0.0, d_row = 0.0;
    for (int c = 0; c < ch; ++c) {
      acc[i00 + c] += w00 * g[c];
      acc[i01 + c] += w01 * g[c];
      acc[i10 + c] += w10 * g[c];
      acc[i11 + c] += w11 * g[c];
      const double v00 = pl.values[i00 + c], v01 = pl.values[i01 + c];
      const double v10 = pl.values[i10 + c], v11 = pl.values[i11 + c];
      if (pl.cols > 1) d_col += g[c] * ((1 - fr) * (v01 - v00) + fr * (v11 - v10));
      if (pl.rows > 1) d_row += g[c] * ((1 - fc) * (v10 - v00) + fc * (v11 - v01));
    }
    d_coords[s.col_axis] += d_col * s.dcol_dx;
    d_coords[s.row_axis] += d_row * s.drow_dx;
  }
  return d_coords.head<3>();
}

LookupGradient HexPlaneGrid::lookup_grad(const Eigen::Vector3d& position, double t,
                                         const Eigen::Ref<const Eigen::VectorXd>& upstream) const {
  if (static_cast<std::size_t>(upstream.size()) != feature_size())
    throw ValidationError("lookup_grad: upstream gradient has the wrong size");
  LookupGradient out;
  out.planes = zero_gradient();
  const Eigen::VectorXd up = upstream;
  out.d_position = accumulate_lookup_grad(position, t, up.data(), out.planes);

  // Time derivative: only the three temporal planes depend on t.
  check_query(position, t);
  const int ch = channels();
  for (std::size_t p = 3; p < kPlaneCount; ++p) {
    const FeaturePlane& pl = planes_[p];
    const PlaneSample s = sample_coords(pl, p, position, t, bounds_, t_min_, t_max_);
    if (pl.rows <= 1) continue;
    const double fc = s.col.f;
    for (int c = 0; c < ch; ++c) {
      const double v00 = pl.at(s.row.i0, s.col.i0, c), v01 = pl.at(s.row.i0, s.col.i1, c);
      const double v10 = pl.at(s.row.i1, s.col.i0, c), v11 = pl.at(s.row.i1, s.col.i1, c);
      out.d_time += up[p * ch + c] * ((1 - fc) * (v10 - v00) + fc * (v11 - v01)) * s.drow_dx;
    }
  }
  return out;
}

std::size_t HexPlaneGrid::parameter_count() const {
  std::size_t n = 0;
  for (const auto& pl : planes_) n += pl.values.size();
  return n;
}

void HexPlaneGrid::append_parameters(std::vector<double>& out) const {
  for (const auto& pl : planes_) out.insert(out.end(), pl.values.begin(), pl.values.end());
}

void HexPlaneGrid::assign_parameters(const double* data) {
  for (auto& pl : planes_) {
    std::copy(data, data + pl.values.size(), pl.values.begin());
    data += pl.values.size();
  }
}

nlohmann::json HexPlaneGrid::to_json() const {
  nlohmann::json j;
  j["format"] = "hexplane-v1";
  j["plane_order"] = std::vector<std::string>(kPlaneNames.begin(), kPlaneNames.end());
  j["channels"] = channels();
  j["bounds"] = {{"min", vec3_to_json(bounds_.min)}, {"max", vec3_to_json(bounds_.max)}};
  j["time_interval"] = {t_min_, t_max_};
  j["planes"] = nlohmann::json::array();
  for (const auto& pl : planes_)
    j["planes"].push_back({{"rows", pl.rows}, {"cols", pl.cols}, {"values", pl.values}});
  return j;
}

HexPlaneGrid HexPlaneGrid::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "hexplane-v1") throw ParseError("grid: unknown format");
    const auto order = j.at("plane_order").get<std::vector<std::string>>();
    if (order != std::vector<std::string>(kPlaneNames.begin(), kPlaneNames.end()))
      throw ParseError("grid: unexpected plane order");
    const int ch = j.at("channels").get<int>();
    Aabb b{vec3_from_json(j.at("bounds").at("min"), "grid.bounds.min"),
           vec3_from_json(j.at("bounds").at("max"), "grid.bounds.max")};
    const auto ti = j.at("time_interval").get<std::vector<double>>();
    if (ti.size() != 2) throw ParseError("grid.time_interval: expected two numbers");
    const auto& planes = j.at("planes");
    if (planes.size() != kPlaneCount) throw ParseError("grid.planes: expected six planes");
    std::array<FeaturePlane, kPlaneCount> pls;
    for (std::size_t p = 0; p < kPlaneCount; ++p) {
      pls[p].rows = planes[p].at("rows").get<int>();
      pls[p].cols = planes[p].at("cols").get<int>();
      pls[p].channels = ch;
      pls[p].values = planes[p].at("values").get<std::vector<double>>();
    }
    return HexPlaneGrid(b, ti[0], ti[1], std::move(pls));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("grid: ") + e.what());
  }
}

double tv_loss(const HexPlaneGrid& grid) {
  double total = 0.0;
  for (std::size_t p = 0; p < kPlaneCount; ++p) {
    const FeaturePlane& pl = grid.plane(p);
    double sum = 0.0;
    std::size_t count = 0;
    for (int r = 0; r < pl.rows; ++r) {
      for (int c = 0; c < pl.cols; ++c) {
        for (int k = 0; k < pl.channels; ++k) {
          if (c + 1 < pl.cols) {
            const double d = pl.at(r, c + 1, k) - pl.at(r, c, k);
            sum += d * d;
            ++count;
          }
          if (r + 1 < pl.rows) {
            const double d = pl.at(r + 1, c, k) - pl.at(r, c, k);
            sum += d * d;
            ++count;
          }
        }
      }
    }
    if (count > 0) total += sum / static_cast<double>(count);
  }
  return total;
}

void accumulate_tv_grad(const HexPlaneGrid& grid, double weight, GridGradient& grad) {
  for (std::size_t p = 0; p < kPlaneCount; ++p) {
    const FeaturePlane& pl = grid.plane(p);
    const std::size_t count =
        static_cast<std::size_t>(pl.channels) *
        (static_cast<std::size_t>(pl.rows) * (pl.cols - 1) +
         static_cast<std::size_t>(pl.rows - 1) * pl.cols);
    if (count == 0) continue;
    const double scale = 2.0 * weight / static_cast<double>(count);
    auto& g = grad[p];
    for (int r = 0; r < pl.rows; ++r) {
      for (int c = 0; c < pl.cols; ++c) {
        for (int k = 0; k < pl.channels; ++k) {
          if (c + 1 < pl.cols) {
            const double d = pl.at(r, c + 1, k) - pl.at(r, c, k);
            g[pl.index(r, c + 1, k)] += scale * d;
            g[pl.index(r, c, k)] -= scale * d;
          }
          if (r + 1 < pl.rows) {
            const double d = pl.at(r + 1, c, k) - pl.at(r, c, k);
            g[pl.index(r + 1, c, k)] += scale * d;
            g[pl.index(r, c, k)] -= scale * d;
          }
        }
      }
    }
  }
}

void append_gradient(const GridGradient& grad, std::vector<double>& out) {
  for (const auto& g : grad) out.insert(out.end(), g.begin(), g.end());
}

}  // namespace flowsplat
