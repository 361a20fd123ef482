#include "flowsplat/neural_field.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "flowsplat/error.hpp"

namespace flowsplat {

namespace {

double uniform_unit(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace

std::vector<double> NeuralGradients::flatten() const {
  std::vector<double> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.insert(out.end(), weights[l].data(), weights[l].data() + weights[l].size());
    out.insert(out.end(), biases[l].data(), biases[l].data() + biases[l].size());
  }
  append_gradient(grid, out);
  return out;
}

void NeuralGradients::add_scaled(const NeuralGradients& other, double scale) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += scale * other.weights[l];
    biases[l] += scale * other.biases[l];
  }
  for (std::size_t p = 0; p < grid.size(); ++p)
    for (std::size_t i = 0; i < grid[p].size(); ++i) grid[p][i] += scale * other.grid[p][i];
}

NeuralVelocityField::NeuralVelocityField(HexPlaneGrid grid, const MlpConfig& config,
                                         std::uint64_t seed)
    : grid_(std::move(grid)), time_frequencies_(config.time_frequencies) {
  std::mt19937_64 gen(seed ^ 0x6d6c70ULL);
  int in = static_cast<int>(input_size());
  std::vector<int> widths = config.hidden;
  widths.push_back(kNeuralOutputs);
  for (std::size_t l = 0; l < widths.size(); ++l) {
    const int out = widths[l];
    if (out <= 0) throw ValidationError("mlp: layer widths must be positive");
    double limit = std::sqrt(6.0 / (in + out));
    if (l + 1 == widths.size()) limit *= config.output_scale;
    Eigen::MatrixXd w(out, in);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = limit * (2.0 * uniform_unit(gen) - 1.0);
    weights_.push_back(std::move(w));
    biases_.push_back(Eigen::VectorXd::Zero(out));
    in = out;
  }
  check_shapes();
}

NeuralVelocityField::NeuralVelocityField(HexPlaneGrid grid, std::vector<Eigen::MatrixXd> weights,
                                         std::vector<Eigen::VectorXd> biases, int time_frequencies)
    : grid_(std::move(grid)),
      weights_(std::move(weights)),
      biases_(std::move(biases)),
      time_frequencies_(time_frequencies) {
  check_shapes();
}

void NeuralVelocityField::check_shapes() const {
  if (time_frequencies_ < 0) throw ValidationError("mlp: time_frequencies must be >= 0");
  if (weights_.empty() || weights_.size() != biases_.size())
    throw ValidationError("mlp: weights and biases must be nonempty and paired");
  Eigen::Index in = static_cast<Eigen::Index>(input_size());
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    if (weights_[l].cols() != in || biases_[l].size() != weights_[l].rows())
      throw ValidationError("mlp: layer " + std::to_string(l) + " has inconsistent shape");
    if (!weights_[l].allFinite() || !biases_[l].allFinite())
      throw ValidationError("mlp: layer " + std::to_string(l) + " has non-finite parameters");
    in = weights_[l].rows();
  }
  if (in != kNeuralOutputs) throw ValidationError("mlp: output layer must have 9 rows");
}

std::size_t NeuralVelocityField::input_size() const {
  return grid_.feature_size() + 3 + 2 * static_cast<std::size_t>(time_frequencies_);
}

void NeuralVelocityField::encode_time(double t, double* out) const {
  t = std::clamp(t, grid_.t_min(), grid_.t_max());
  for (int k = 0; k < time_frequencies_; ++k) {
    const double w = std::ldexp(M_PI, k);
    out[2 * k] = std::sin(w * t);
    out[2 * k + 1] = std::cos(w * t);
  }
}

Eigen::MatrixXd NeuralVelocityField::forward(const Eigen::Matrix3Xd& positions, double t,
                                             Cache* cache) const {
  if (!std::isfinite(t)) throw NumericalError("neural field: non-finite time");
  const Eigen::Index n = positions.cols();
  const std::size_t nf = grid_.feature_size();
  Eigen::MatrixXd input(static_cast<Eigen::Index>(input_size()), n);
  std::vector<double> time_code(2 * static_cast<std::size_t>(time_frequencies_));
  encode_time(t, time_code.data());
  for (Eigen::Index i = 0; i < n; ++i) {
    double* col = input.col(i).data();
    grid_.lookup_into(positions.col(i), t, col);
    for (int a = 0; a < 3; ++a)
      col[nf + a] = std::clamp(positions(a, i), grid_.bounds().min[a], grid_.bounds().max[a]);
    std::copy(time_code.begin(), time_code.end(), col + nf + 3);
  }

  Eigen::MatrixXd a = std::move(input);
  if (cache) {
    cache->t = t;
    cache->positions = positions;
    cache->activations.clear();
  }
  const std::size_t layers = weights_.size();
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = weights_[l] * a;
    z.colwise() += biases_[l];
    if (l + 1 < layers) z = z.array().tanh().matrix();
    if (!z.allFinite())
      throw NumericalError("neural field: non-finite activations in layer " + std::to_string(l));
    if (cache) cache->activations.push_back(std::move(a));
    a = std::move(z);
  }
  return a;
}

Eigen::Matrix3Xd NeuralVelocityField::backward(const Cache& cache, const Eigen::MatrixXd& upstream,
                                               NeuralGradients& grads) const {
  const Eigen::Index n = cache.positions.cols();
  if (cache.activations.size() != weights_.size() || upstream.rows() != kNeuralOutputs ||
      upstream.cols() != n)
    throw ValidationError("neural_backward: cache and upstream batch do not match");

  Eigen::MatrixXd delta = upstream;
  for (std::size_t l = weights_.size(); l-- > 0;) {
    const Eigen::MatrixXd& a_prev = cache.activations[l];
    grads.weights[l].noalias() += delta * a_prev.transpose();
    grads.biases[l] += delta.rowwise().sum();
    Eigen::MatrixXd d_prev = weights_[l].transpose() * delta;
    if (l > 0) d_prev.array() *= (1.0 - a_prev.array().square());
    delta = std::move(d_prev);
  }

  const std::size_t nf = grid_.feature_size();
  Eigen::Matrix3Xd d_pos(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double* col = delta.col(i).data();
    d_pos.col(i) = grid_.accumulate_lookup_grad(cache.positions.col(i), cache.t, col, grads.grid);
    for (int a = 0; a < 3; ++a) {
      const double x = cache.positions(a, i);
      if (x >= grid_.bounds().min[a] && x <= grid_.bounds().max[a]) d_pos(a, i) += col[nf + a];
    }
  }
  return d_pos;
}

StateDerivative NeuralVelocityField::evaluate(const FieldQuery& query) const {
  const Eigen::Matrix3Xd p = query.state.position;
  const Eigen::MatrixXd out = forward(p, query.t);
  StateDerivative d;
  d.d_position = out.block<3, 1>(0, 0);
  d.d_rotation = out.block<3, 1>(3, 0);
  d.d_log_scale = out.block<3, 1>(6, 0);
  return d;
}

NeuralGradients NeuralVelocityField::zero_gradients() const {
  NeuralGradients g;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    g.weights.push_back(Eigen::MatrixXd::Zero(weights_[l].rows(), weights_[l].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(biases_[l].size()));
  }
  g.grid = grid_.zero_gradient();
  return g;
}

std::size_t NeuralVelocityField::parameter_count() const {
  std::size_t n = grid_.parameter_count();
  for (std::size_t l = 0; l < weights_.size(); ++l)
    n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  return n;
}

std::vector<double> NeuralVelocityField::parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.insert(out.end(), weights_[l].data(), weights_[l].data() + weights_[l].size());
    out.insert(out.end(), biases_[l].data(), biases_[l].data() + biases_[l].size());
  }
  grid_.append_parameters(out);
  return out;
}

void NeuralVelocityField::set_parameters(const std::vector<double>& flat) {
  if (flat.size() != parameter_count())
    throw ValidationError("set_parameters: expected " + std::to_string(parameter_count()) +
                          " values, got " + std::to_string(flat.size()));
  const double* p = flat.data();
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    std::copy(p, p + weights_[l].size(), weights_[l].data());
    p += weights_[l].size();
    std::copy(p, p + biases_[l].size(), biases_[l].data());
    p += biases_[l].size();
  }
  grid_.assign_parameters(p);
}

std::vector<ParameterGroup> NeuralVelocityField::parameter_groups() const {
  std::vector<ParameterGroup> groups;
  std::size_t offset = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const auto nw = static_cast<std::size_t>(weights_[l].size());
    const auto nb = static_cast<std::size_t>(biases_[l].size());
    groups.push_back({"mlp.W" + std::to_string(l), offset, nw});
    offset += nw;
    groups.push_back({"mlp.b" + std::to_string(l), offset, nb});
    offset += nb;
  }
  for (std::size_t p = 0; p < kPlaneCount; ++p) {
    const std::size_t n = grid_.plane(p).values.size();
    groups.push_back({"grid." + std::string(kPlaneNames[p]), offset, n});
    offset += n;
  }
  return groups;
}

nlohmann::json NeuralVelocityField::to_json() const {
  nlohmann::json j;
  j["time_frequencies"] = time_frequencies_;
  j["activation"] = "tanh";
  j["layers"] = nlohmann::json::array();
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    // Row-major weight dump.
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(weights_[l].size()));
    for (Eigen::Index r = 0; r < weights_[l].rows(); ++r)
      for (Eigen::Index c = 0; c < weights_[l].cols(); ++c) w.push_back(weights_[l](r, c));
    j["layers"].push_back({{"rows", weights_[l].rows()},
                           {"cols", weights_[l].cols()},
                           {"weights", w},
                           {"bias", std::vector<double>(biases_[l].data(),
                                                        biases_[l].data() + biases_[l].size())}});
  }
  j["grid"] = grid_.to_json();
  return j;
}

NeuralVelocityField NeuralVelocityField::from_json(const nlohmann::json& j) {
  try {
    HexPlaneGrid grid = HexPlaneGrid::from_json(j.at("grid"));
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
    for (const auto& layer : j.at("layers")) {
      const auto rows = layer.at("rows").get<Eigen::Index>();
      const auto cols = layer.at("cols").get<Eigen::Index>();
      const auto w = layer.at("weights").get<std::vector<double>>();
      const auto b = layer.at("bias").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(w.size()) != rows * cols ||
          static_cast<Eigen::Index>(b.size()) != rows)
        throw ParseError("mlp layer: value count does not match its shape");
      Eigen::MatrixXd m(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = w[static_cast<std::size_t>(r * cols + c)];
      weights.push_back(std::move(m));
      biases.push_back(Eigen::Map<const Eigen::VectorXd>(b.data(), rows));
    }
    return NeuralVelocityField(std::move(grid), std::move(weights), std::move(biases),
                               j.at("time_frequencies").get<int>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("neural field: ") + e.what());
  }
}

}  // namespace flowsplat
