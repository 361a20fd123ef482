#include "flowsplat/adam.hpp"
#include "flowsplat/train.hpp"

namespace flowsplat {

FitResult fit(const GaussianCloud& cloud, const GroundTruth& truth, const TrainingConfig& config,
              const ProgressCallback& progress) {
  const TrainingProblem problem = make_problem(cloud, truth, config);
  NeuralVelocityField field = initial_field(problem, config);

  const AdamConfig adam{config.learning_rate, config.beta1, config.beta2, config.adam_epsilon};
  AdamState state;
  std::vector<double> params = field.parameters();
  std::vector<LossReport> history;
  history.reserve(static_cast<std::size_t>(config.epochs));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const std::vector<std::size_t> rows = coherence_rows(problem.canonical.size(), config, epoch);
    const Evaluation e = evaluate_objective(field, problem, config, rows, true, epoch);
    history.push_back(e.report);
    if (progress) progress(e.report);
    adam_step(params, e.gradient, state, adam);
    field.set_parameters(params);
  }
  return FitResult{std::move(field), problem.anchors, std::move(history), problem.frames};
}

}  // namespace flowsplat
