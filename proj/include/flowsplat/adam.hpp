#pragma once

#include <cstddef>
#include <vector>

namespace flowsplat {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::size_t step = 0;  // number of updates applied so far
};

// Bias-corrected Adam update. Moments are sized on first use; afterwards a
// size mismatch throws ValidationError.
void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state,
               const AdamConfig& config);

}  // namespace flowsplat
