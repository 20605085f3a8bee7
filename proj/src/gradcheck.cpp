#include "viewsyn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace viewsyn {

namespace {

// True if some warped sample at some level sits within the perturbation
// reach of an integer coordinate.
bool near_kink(const SnippetState& state, int levels, double step) {
  const std::vector<Image> depth = build_pyramid(state.depth(), levels);
  for (int l = 0; l < levels; ++l) {
    const Intrinsics K = scale_intrinsics(state.intrinsics, l);
    const double margin = 2.5 * step * (K.fx + K.fy);
    for (int s = 0; s < state.num_sources(); ++s) {
      const RigidTransform T = pose_to_transform(state.pose(s));
      for (int i = 0; i < K.height; ++i)
        for (int j = 0; j < K.width; ++j) {
          const Projection p = project({double(j), double(i)}, depth[l].at(i, j), K, T);
          if (!p.valid) continue;
          if (std::abs(p.pixel.u - std::round(p.pixel.u)) < margin ||
              std::abs(p.pixel.v - std::round(p.pixel.v)) < margin)
            return true;
        }
    }
  }
  return false;
}

}  // namespace

SnippetState random_instance(const GradCheckOptions& options, bool with_masks) {
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> angle(-0.05, 0.05);
  std::uniform_real_distribution<double> shift(-0.1, 0.1);
  std::normal_distribution<double> normal(0.0, 1.0);

  Intrinsics K;
  K.width = options.width;
  K.height = options.height;
  K.fx = K.fy = options.width;
  K.cx = (options.width - 1) / 2.0;
  K.cy = (options.height - 1) / 2.0;

  SnippetState state;
  for (int f = 0; f < options.frames; ++f) {
    Image img(options.height, options.width, options.channels);
    for (double& v : img.data()) v = unit(rng);
    state.frames.push_back(std::move(img));
  }
  state.target_index = options.frames / 2;
  state.intrinsics = K;
  const int levels = static_cast<int>(build_pyramid(state.frames.front(), options.levels).size());
  state.layout = ParameterLayout(options.height, options.width, options.frames - 1, levels, with_masks);
  state.params.assign(state.layout.total(), 0.0);
  for (int attempt = 0;; ++attempt) {
    if (attempt == 1000) throw std::runtime_error("random_instance: no draw away from sampling kinks");
    for (std::size_t k = 0; k < state.layout.depth_size(); ++k)
      state.params[state.layout.depth_offset() + k] = depth_to_logit(1.0 + 2.0 * unit(rng));
    for (int s = 0; s < state.num_sources(); ++s)
      state.set_pose(s, {angle(rng), angle(rng), angle(rng), shift(rng), shift(rng), shift(rng)});
    if (!options.avoid_kinks || !near_kink(state, levels, options.step)) break;
  }
  if (with_masks)
    for (int l = 0; l < levels; ++l)
      for (int s = 0; s < state.num_sources(); ++s)
        for (std::size_t k = 0; k < state.layout.mask_size(l); ++k)
          state.params[state.layout.mask_offset(l, s) + k] = normal(rng);
  return state;
}

bool GradCheckReport::passed(double tolerance) const {
  return std::all_of(groups.begin(), groups.end(),
                     [&](const GradCheckGroup& g) { return std::isfinite(g.rel_error) && g.rel_error <= tolerance; });
}

GradCheckReport check_gradients(const SnippetState& state, const LossConfig& config, double step, bool inject_fault) {
  const Objective objective(state, config);
  const ParameterLayout& layout = objective.layout();
  std::vector<double> analytic(layout.total());
  objective.evaluate(state.params, analytic);
  if (inject_fault)
    for (std::size_t k = 0; k < layout.depth_size(); ++k) analytic[layout.depth_offset() + k] *= 1.01;

  std::vector<double> params = state.params;
  auto numeric = [&](std::size_t k) {
    const double saved = params[k];
    params[k] = saved + step;
    const double plus = objective.evaluate(params).total;
    params[k] = saved - step;
    const double minus = objective.evaluate(params).total;
    params[k] = saved;
    return (plus - minus) / (2.0 * step);
  };
  auto check_range = [&](const std::string& name, const std::vector<std::size_t>& indices) {
    GradCheckGroup g;
    g.name = name;
    g.count = indices.size();
    double max_numeric = 0.0;
    for (std::size_t k : indices) {
      const double n = numeric(k);
      g.max_abs_error = std::max(g.max_abs_error, std::abs(analytic[k] - n));
      max_numeric = std::max(max_numeric, std::abs(n));
    }
    g.rel_error = max_numeric > 0.0 ? g.max_abs_error / max_numeric : g.max_abs_error;
    return g;
  };

  GradCheckReport report;
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < layout.depth_size(); ++k) idx.push_back(layout.depth_offset() + k);
  report.groups.push_back(check_range("depth_logits", idx));
  idx.clear();
  for (int s = 0; s < layout.num_sources(); ++s)
    for (int k = 0; k < 6; ++k) idx.push_back(layout.pose_offset(s) + k);
  report.groups.push_back(check_range("pose", idx));
  if (config.use_explainability && layout.with_masks()) {
    idx.clear();
    for (int l = 0; l < layout.num_levels(); ++l)
      for (int s = 0; s < layout.num_sources(); ++s)
        for (std::size_t k = 0; k < layout.mask_size(l); ++k) idx.push_back(layout.mask_offset(l, s) + k);
    report.groups.push_back(check_range("mask_logits", idx));
  }
  return report;
}

}  // namespace viewsyn
