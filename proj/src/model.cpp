#include "viewsyn/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace viewsyn {

SnippetState init_state(std::vector<Image> frames, const Intrinsics& K, const InitConfig& config) {
  if (frames.size() < 2) throw std::invalid_argument("init_state: need at least two frames");
  for (const Image& f : frames)
    if (f.empty() || !f.same_shape(frames.front()))
      throw std::invalid_argument("init_state: frames must be non-empty and equally sized");
  K.validate();
  if (K.width != frames.front().width() || K.height != frames.front().height())
    throw std::invalid_argument("init_state: intrinsics do not match the frame size");
  if (config.num_levels < 1) throw std::invalid_argument("init_state: num_levels must be at least 1");

  SnippetState state;
  state.target_index = config.target_index < 0 ? static_cast<int>(frames.size()) / 2 : config.target_index;
  if (state.target_index >= static_cast<int>(frames.size()))
    throw std::invalid_argument("init_state: target index out of range");
  state.intrinsics = K;
  const int height = frames.front().height(), width = frames.front().width();
  const int levels = static_cast<int>(build_pyramid(Image(height, width, 1), config.num_levels).size());
  state.frames = std::move(frames);
  state.layout = ParameterLayout(height, width, state.num_sources(), levels, config.use_explainability);
  state.params.assign(state.layout.total(), 0.0);

  const double logit = depth_to_logit(config.depth_prior);
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> noise(0.0, config.depth_jitter);
  for (std::size_t k = 0; k < state.layout.depth_size(); ++k)
    state.params[state.layout.depth_offset() + k] = config.depth_jitter > 0.0 ? logit + noise(rng) : logit;
  return state;
}

void AdamConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("adam: learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw std::invalid_argument("adam: betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("adam: epsilon must be positive");
  if (max_iters < 0 || window < 1) throw std::invalid_argument("adam: invalid iteration settings");
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamMoments& moments,
               const AdamConfig& config, int t) {
  if (t < 1) throw std::invalid_argument("adam_step: step index starts at 1");
  if (grads.size() != params.size() || moments.first.size() != params.size() ||
      moments.second.size() != params.size())
    throw std::invalid_argument("adam_step: buffer shapes do not match");
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grads[k];
    double& m = moments.first[k];
    double& v = moments.second[k];
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g * g;
    params[k] -= config.lr * (m / c1) / (std::sqrt(v / c2) + config.epsilon);
  }
}

FitResult fit_snippet(SnippetState state, const LossConfig& loss_config, const AdamConfig& adam_config,
                      const FitObserver& observer) {
  adam_config.validate();
  const Objective objective(state, loss_config);
  std::vector<double> grad(state.params.size());
  AdamMoments moments(state.params.size());

  FitResult result;
  std::vector<double> best_before;  // running minimum of the loss
  for (int iter = 0;; ++iter) {
    LossReport report = objective.evaluate(state.params, grad);
    if (!std::isfinite(report.total))
      throw FitDivergedError(iter, "fit_snippet: loss became non-finite at iteration " + std::to_string(iter));
    if (observer) observer(iter, report);
    result.history.push_back(std::move(report));

    // Best loss before the window vs. best loss inside it; Adam's iterates
    // are not monotone, so comparing single endpoints stops on noise.
    const int n = static_cast<int>(result.history.size());
    best_before.push_back(std::min(best_before.empty() ? result.history.back().total : best_before.back(),
                                   result.history.back().total));
    if (n > adam_config.window) {
      const double before = best_before[n - 1 - adam_config.window];
      double now = before;
      for (int k = n - adam_config.window; k < n; ++k) now = std::min(now, result.history[k].total);
      if (before <= 0.0 || (before - now) / before < adam_config.tolerance) {
        result.converged = true;
        break;
      }
    }
    if (iter >= adam_config.max_iters) break;
    adam_step(state.params, grad, moments, adam_config, iter + 1);
    result.iterations = iter + 1;
  }
  result.state = std::move(state);
  return result;
}

FitResult fit_snippet(std::vector<Image> frames, const Intrinsics& K, const LossConfig& loss_config,
                      const AdamConfig& adam_config, InitConfig init_config) {
  init_config.num_levels = loss_config.num_levels;
  init_config.use_explainability = loss_config.use_explainability;
  if (init_config.seed == 0) init_config.seed = adam_config.seed;
  return fit_snippet(init_state(std::move(frames), K, init_config), loss_config, adam_config);
}

}  // namespace viewsyn
