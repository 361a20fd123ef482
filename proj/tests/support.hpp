#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "flowsplat/scene.hpp"

namespace testing {

// Small seeded generator for property tests.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * (static_cast<double>(gen_() >> 11) * 0x1.0p-53);
  }
  int integer(int lo, int hi) { return lo + static_cast<int>(gen_() % (hi - lo + 1)); }
  Eigen::Vector3d vec3(double lo = 0.0, double hi = 1.0) {
    return {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)};
  }
  Eigen::Quaterniond rotation() {
    Eigen::Vector4d v(uniform(-1, 1), uniform(-1, 1), uniform(-1, 1), uniform(-1, 1));
    v.normalize();
    return Eigen::Quaterniond(v[0], v[1], v[2], v[3]);
  }

 private:
  std::mt19937_64 gen_;
};

inline flowsplat::GaussianCloud random_cloud(Rng& rng, std::size_t n, double lo = 0.0,
                                             double hi = 1.0) {
  flowsplat::GaussianCloud c;
  for (std::size_t i = 0; i < n; ++i) {
    flowsplat::GaussianState g;
    g.position = rng.vec3(lo, hi);
    g.rotation = rng.rotation();
    g.log_scale = rng.vec3(-4.0, -3.0);
    g.color = rng.vec3(0.1, 1.0);
    g.opacity = rng.uniform(0.3, 1.0);
    c.gaussians.push_back(g);
  }
  c.bounds = flowsplat::bounding_box(c);
  return c;
}

inline double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

// Fresh scratch directory under the test's working directory.
inline std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::current_path() / "scratch" / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing
