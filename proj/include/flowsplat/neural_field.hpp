#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "flowsplat/feature_grid.hpp"
#include "flowsplat/fields.hpp"

namespace flowsplat {

struct MlpConfig {
  std::vector<int> hidden{64, 64};
  int time_frequencies = 4;
  // Scale of the output layer's initial weights. Zero starts training from the
  // exactly-zero field.
  double output_scale = 0.0;
};

// Output rows of the network: d_position (0..2), angular velocity (3..5),
// d_log_scale (6..8).
inline constexpr int kNeuralOutputs = 9;

struct ParameterGroup {
  std::string name;
  std::size_t offset;
  std::size_t size;
};

// Gradient buffers shaped like the field's parameters.
struct NeuralGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  GridGradient grid;

  std::vector<double> flatten() const;
  void add_scaled(const NeuralGradients& other, double scale);
};

// First-order learned law: an MLP over [grid features, position, time encoding]
// producing the 9-vector of state derivatives. Hidden layers use tanh. The raw
// position and time inputs are clamped into the grid's box and time interval,
// like the grid lookup, so the field continues as a constant outside them.
class NeuralVelocityField final : public VelocityField {
 public:
  // Activations of one batched forward pass, kept for backward().
  struct Cache {
    double t = 0.0;
    Eigen::Matrix3Xd positions;
    std::vector<Eigen::MatrixXd> activations;  // [input, hidden_1, ..., hidden_L]
  };

  NeuralVelocityField(HexPlaneGrid grid, const MlpConfig& config, std::uint64_t seed);
  NeuralVelocityField(HexPlaneGrid grid, std::vector<Eigen::MatrixXd> weights,
                      std::vector<Eigen::VectorXd> biases, int time_frequencies);

  StateDerivative evaluate(const FieldQuery& query) const override;

  // Batched evaluation at a shared time t; returns 9 x N.
  Eigen::MatrixXd forward(const Eigen::Matrix3Xd& positions, double t, Cache* cache = nullptr) const;
  // Reverse pass for upstream (9 x N): accumulates parameter gradients and
  // returns d/d positions (3 x N).
  Eigen::Matrix3Xd backward(const Cache& cache, const Eigen::MatrixXd& upstream,
                            NeuralGradients& grads) const;

  NeuralGradients zero_gradients() const;

  const HexPlaneGrid& grid() const { return grid_; }
  HexPlaneGrid& grid() { return grid_; }
  const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
  const std::vector<Eigen::VectorXd>& biases() const { return biases_; }
  std::vector<Eigen::MatrixXd>& weights() { return weights_; }
  std::vector<Eigen::VectorXd>& biases() { return biases_; }
  int time_frequencies() const { return time_frequencies_; }
  std::size_t input_size() const;

  // Flat parameter vector: W0, b0, W1, b1, ..., then the grid planes.
  std::size_t parameter_count() const;
  std::vector<double> parameters() const;
  void set_parameters(const std::vector<double>& flat);
  std::vector<ParameterGroup> parameter_groups() const;

  nlohmann::json to_json() const;
  static NeuralVelocityField from_json(const nlohmann::json& j);

 private:
  void check_shapes() const;
  void encode_time(double t, double* out) const;

  HexPlaneGrid grid_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
  int time_frequencies_ = 4;
};

}  // namespace flowsplat
