#include <cmath>
#include <stdexcept>

#include "viewsyn/reference.hpp"

namespace viewsyn::reference {

namespace {

double softmax1(double z0, double z1) { return std::exp(z1) / (std::exp(z0) + std::exp(z1)); }

double sgn(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

ViewSynthesisLoss view_synthesis_loss(const Image& target, std::span<const WarpResult> warps,
                                      std::span<const Image> mask_logits, Reduction reduction) {
  const bool masked = !mask_logits.empty();
  const int h = target.height(), w = target.width(), nc = target.channels();
  ViewSynthesisLoss out;
  std::size_t valid_total = 0;
  for (std::size_t s = 0; s < warps.size(); ++s) {
    const WarpResult& wr = warps[s];
    Image d_warped(h, w, nc);
    Image d_mask = masked ? Image(h, w, 2) : Image();
    double sum = 0.0;
    std::size_t count = 0;
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        if (!wr.valid[static_cast<std::size_t>(i) * w + j]) continue;
        ++count;
        const double e = masked ? softmax1(mask_logits[s].at(i, j, 0), mask_logits[s].at(i, j, 1)) : 1.0;
        for (int c = 0; c < nc; ++c) sum += e * std::abs(target.at(i, j, c) - wr.warped.at(i, j, c));
      }
    const double norm = reduction == Reduction::Mean && count > 0 ? 1.0 / (static_cast<double>(count) * nc) : 1.0;
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        if (!wr.valid[static_cast<std::size_t>(i) * w + j]) continue;
        const double e = masked ? softmax1(mask_logits[s].at(i, j, 0), mask_logits[s].at(i, j, 1)) : 1.0;
        double err = 0.0;
        for (int c = 0; c < nc; ++c) {
          const double diff = wr.warped.at(i, j, c) - target.at(i, j, c);
          err += std::abs(diff);
          d_warped.at(i, j, c) = norm * e * sgn(diff);
        }
        if (masked) {
          d_mask.at(i, j, 1) = norm * err * e * (1.0 - e);
          d_mask.at(i, j, 0) = -norm * err * e * (1.0 - e);
        }
      }
    out.per_source.push_back(sum * norm);
    out.valid_counts.push_back(count);
    out.value += sum * norm;
    valid_total += count;
    out.d_warped.push_back(std::move(d_warped));
    if (masked) out.d_mask_logits.push_back(std::move(d_mask));
  }
  out.degenerate = valid_total == 0;
  return out;
}

ScalarLoss smoothness_loss(const Image& depth, Reduction reduction) {
  const int h = depth.height(), w = depth.width();
  ScalarLoss out{0.0, Image(h, w, 1)};
  if (w >= 3) {
    const double norm = reduction == Reduction::Mean ? 1.0 / (static_cast<double>(h) * (w - 2)) : 1.0;
    for (int i = 0; i < h; ++i)
      for (int j = 1; j + 1 < w; ++j) {
        const double d2 = depth.at(i, j - 1) - 2.0 * depth.at(i, j) + depth.at(i, j + 1);
        out.value += norm * std::abs(d2);
        out.gradient.at(i, j - 1) += norm * sgn(d2);
        out.gradient.at(i, j) -= 2.0 * norm * sgn(d2);
        out.gradient.at(i, j + 1) += norm * sgn(d2);
      }
  }
  if (h >= 3) {
    const double norm = reduction == Reduction::Mean ? 1.0 / (static_cast<double>(h - 2) * w) : 1.0;
    for (int i = 1; i + 1 < h; ++i)
      for (int j = 0; j < w; ++j) {
        const double d2 = depth.at(i - 1, j) - 2.0 * depth.at(i, j) + depth.at(i + 1, j);
        out.value += norm * std::abs(d2);
        out.gradient.at(i - 1, j) += norm * sgn(d2);
        out.gradient.at(i, j) -= 2.0 * norm * sgn(d2);
        out.gradient.at(i + 1, j) += norm * sgn(d2);
      }
  }
  return out;
}

ScalarLoss explainability_regularizer(const Image& mask_logits, Reduction reduction) {
  const int h = mask_logits.height(), w = mask_logits.width();
  const double norm = reduction == Reduction::Mean ? 1.0 / (static_cast<double>(h) * w) : 1.0;
  ScalarLoss out{0.0, Image(h, w, 2)};
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      const double e = softmax1(mask_logits.at(i, j, 0), mask_logits.at(i, j, 1));
      out.value -= norm * std::log(e);
      out.gradient.at(i, j, 0) = norm * (1.0 - e);
      out.gradient.at(i, j, 1) = -norm * (1.0 - e);
    }
  return out;
}

LossReport total_loss(const SnippetState& state, const LossConfig& config, std::span<double> grad) {
  state.validate();
  const ParameterLayout& layout = state.layout;
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
  const bool masked = config.use_explainability;
  const int levels = layout.num_levels(), sources = state.num_sources();

  const Image logits = state.depth_logits();
  std::vector<Image> depth{activate_depth(logits)};
  std::vector<Image> target{state.target()};
  std::vector<std::vector<Image>> src(levels);
  for (int s = 0; s < sources; ++s) src[0].push_back(state.source(s));
  for (int l = 1; l < levels; ++l) {
    depth.push_back(downsample2x(depth.back()));
    target.push_back(downsample2x(target.back()));
    for (int s = 0; s < sources; ++s) src[l].push_back(downsample2x(src[l - 1][s]));
  }
  std::vector<Image> d_depth;
  for (const Image& d : depth) d_depth.emplace_back(d.height(), d.width(), 1);

  LossReport report;
  report.lambda_e = config.lambda_e;
  for (int l = 0; l < levels; ++l) {
    const Intrinsics K = scale_intrinsics(state.intrinsics, l);
    std::vector<WarpResult> warps;
    for (int s = 0; s < sources; ++s)
      warps.push_back(reference::inverse_warp(src[l][s], depth[l], pose_to_transform(state.pose(s)), K));
    std::vector<Image> masks;
    if (masked)
      for (int s = 0; s < sources; ++s) masks.push_back(state.mask_logits(l, s));

    LevelLoss level;
    const ViewSynthesisLoss vs = reference::view_synthesis_loss(target[l], warps, masks, config.reduction);
    level.view_synthesis = vs.value;
    level.view_synthesis_per_source = vs.per_source;
    level.valid_counts = vs.valid_counts;
    report.degenerate = report.degenerate || vs.degenerate;
    const ScalarLoss smooth = reference::smoothness_loss(depth[l], config.reduction);
    level.smoothness = smooth.value;
    level.smoothness_weight = config.lambda_s / std::pow(2.0, l);
    double reg_sum = 0.0;
    for (int s = 0; s < static_cast<int>(masks.size()); ++s) {
      const ScalarLoss reg = reference::explainability_regularizer(masks[s], config.reduction);
      level.regularizer.push_back(reg.value);
      reg_sum += reg.value;
      if (want_grad)
        for (std::size_t k = 0; k < layout.mask_size(l); ++k)
          grad[layout.mask_offset(l, s) + k] += vs.d_mask_logits[s].data()[k] + config.lambda_e * reg.gradient.data()[k];
    }
    report.total += level.view_synthesis + level.smoothness_weight * level.smoothness + config.lambda_e * reg_sum;
    if (want_grad) {
      for (int s = 0; s < sources; ++s) {
        const auto pg = reference::backprop_warp(warps[s], state.pose(s), depth[l], vs.d_warped[s], d_depth[l]);
        for (int k = 0; k < 6; ++k) grad[layout.pose_offset(s) + k] += pg[k];
      }
      for (std::size_t k = 0; k < d_depth[l].size(); ++k)
        d_depth[l].data()[k] += level.smoothness_weight * smooth.gradient.data()[k];
    }
    report.levels.push_back(std::move(level));
  }
  if (want_grad) {
    for (int l = levels - 1; l >= 1; --l)
      for (int i = 0; i < d_depth[l].height(); ++i)
        for (int j = 0; j < d_depth[l].width(); ++j)
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) d_depth[l - 1].at(2 * i + a, 2 * j + b) += 0.25 * d_depth[l].at(i, j);
    for (std::size_t k = 0; k < layout.depth_size(); ++k)
      grad[layout.depth_offset() + k] = d_depth[0].data()[k] * activate_depth_derivative(logits.data()[k]);
  }
  return report;
}

}  // namespace viewsyn::reference
