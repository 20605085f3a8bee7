#include "viewsyn/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "viewsyn/parallel.hpp"

namespace viewsyn {

namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double mask_value(const Image& logits, int i, int j) {
  const double z = logits.at(i, j, 1) - logits.at(i, j, 0);
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace

void LossConfig::validate() const {
  if (!(lambda_s >= 0.0) || !(lambda_e >= 0.0))
    throw std::invalid_argument("loss config: weights must be non-negative");
  if (num_levels < 1) throw std::invalid_argument("loss config: num_levels must be at least 1");
}

ViewSynthesisLoss view_synthesis_loss(const Image& target, std::span<const WarpResult> warps,
                                      std::span<const Image> mask_logits, Reduction reduction) {
  if (warps.empty()) throw std::invalid_argument("view_synthesis_loss: no warped sources");
  const bool masked = !mask_logits.empty();
  if (masked && mask_logits.size() != warps.size())
    throw std::invalid_argument("view_synthesis_loss: one mask per source required");
  const int height = target.height(), width = target.width(), channels = target.channels();
  for (std::size_t s = 0; s < warps.size(); ++s) {
    if (!warps[s].warped.same_shape(target))
      throw std::invalid_argument("view_synthesis_loss: warped source does not match the target");
    if (masked && (mask_logits[s].height() != height || mask_logits[s].width() != width ||
                   mask_logits[s].channels() != 2))
      throw std::invalid_argument("view_synthesis_loss: mask does not match the target");
  }

  ViewSynthesisLoss out;
  std::size_t total_valid = 0;
  for (std::size_t s = 0; s < warps.size(); ++s) {
    const WarpResult& w = warps[s];
    const double norm = reduction == Reduction::Mean && w.valid_count > 0
                            ? 1.0 / (static_cast<double>(w.valid_count) * channels)
                            : 1.0;
    Image d_warped(height, width, channels);
    Image d_mask = masked ? Image(height, width, 2) : Image();
    std::vector<double> row_sums(height, 0.0);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < height; ++i) {
      double row = 0.0;
      for (int j = 0; j < width; ++j) {
        if (!w.valid[static_cast<std::size_t>(i) * width + j]) continue;
        const double e = masked ? mask_value(mask_logits[s], i, j) : 1.0;
        double abs_sum = 0.0;
        for (int c = 0; c < channels; ++c) {
          const double diff = w.warped.at(i, j, c) - target.at(i, j, c);
          abs_sum += std::abs(diff);
          d_warped.at(i, j, c) = e * sign(diff) * norm;
        }
        row += e * abs_sum;
        if (masked) {
          const double de = abs_sum * norm * e * (1.0 - e);
          d_mask.at(i, j, 1) = de;
          d_mask.at(i, j, 0) = -de;
        }
      }
      row_sums[i] = row;
    }
    const double value = ordered_sum(row_sums) * norm;
    out.per_source.push_back(value);
    out.valid_counts.push_back(w.valid_count);
    out.value += value;
    total_valid += w.valid_count;
    out.d_warped.push_back(std::move(d_warped));
    if (masked) out.d_mask_logits.push_back(std::move(d_mask));
  }
  out.degenerate = total_valid == 0;
  return out;
}

ScalarLoss explainability_regularizer(const Image& mask_logits, Reduction reduction) {
  if (mask_logits.channels() != 2 || mask_logits.empty())
    throw std::invalid_argument("explainability_regularizer: expected a non-empty 2-channel grid");
  const int height = mask_logits.height(), width = mask_logits.width();
  const double norm = reduction == Reduction::Mean ? 1.0 / static_cast<double>(mask_logits.pixel_count()) : 1.0;
  ScalarLoss out{0.0, Image(height, width, 2)};
  std::vector<double> row_sums(height, 0.0);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < height; ++i) {
    double row = 0.0;
    for (int j = 0; j < width; ++j) {
      // -log softmax_1 = softplus(z0 - z1)
      row += softplus(mask_logits.at(i, j, 0) - mask_logits.at(i, j, 1));
      const double g = (1.0 - mask_value(mask_logits, i, j)) * norm;
      out.gradient.at(i, j, 0) = g;
      out.gradient.at(i, j, 1) = -g;
    }
    row_sums[i] = row;
  }
  out.value = ordered_sum(row_sums) * norm;
  return out;
}

ScalarLoss smoothness_loss(const Image& depth, Reduction reduction) {
  if (depth.channels() != 1) throw std::invalid_argument("smoothness_loss: expected a single-channel map");
  const int height = depth.height(), width = depth.width();
  ScalarLoss out{0.0, Image(height, width, 1)};
  const bool has_u = width >= 3, has_v = height >= 3;
  const double norm_u = !has_u ? 0.0
                        : reduction == Reduction::Mean ? 1.0 / (static_cast<double>(height) * (width - 2))
                                                       : 1.0;
  const double norm_v = !has_v ? 0.0
                        : reduction == Reduction::Mean ? 1.0 / (static_cast<double>(height - 2) * width)
                                                       : 1.0;

  // Signs of each stencil, stored at its centre pixel, then gathered so
  // every output pixel is written by exactly one thread.
  Image sign_u(height, width, 1), sign_v(height, width, 1);
  std::vector<double> rows_u(height, 0.0), rows_v(height, 0.0);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < height; ++i) {
    double su = 0.0, sv = 0.0;
    for (int j = 0; j < width; ++j) {
      if (has_u && j >= 1 && j + 1 < width) {
        const double d2 = depth.at(i, j - 1) - 2.0 * depth.at(i, j) + depth.at(i, j + 1);
        su += std::abs(d2);
        sign_u.at(i, j) = sign(d2);
      }
      if (has_v && i >= 1 && i + 1 < height) {
        const double d2 = depth.at(i - 1, j) - 2.0 * depth.at(i, j) + depth.at(i + 1, j);
        sv += std::abs(d2);
        sign_v.at(i, j) = sign(d2);
      }
    }
    rows_u[i] = su;
    rows_v[i] = sv;
  }
  out.value = ordered_sum(rows_u) * norm_u + ordered_sum(rows_v) * norm_v;

#pragma omp parallel for schedule(static)
  for (int i = 0; i < height; ++i)
    for (int j = 0; j < width; ++j) {
      double g = 0.0;
      if (has_u) {
        if (j >= 1) g += sign_u.at(i, j - 1);
        g -= 2.0 * sign_u.at(i, j);
        if (j + 1 < width) g += sign_u.at(i, j + 1);
      }
      double h = 0.0;
      if (has_v) {
        if (i >= 1) h += sign_v.at(i - 1, j);
        h -= 2.0 * sign_v.at(i, j);
        if (i + 1 < height) h += sign_v.at(i + 1, j);
      }
      out.gradient.at(i, j) = g * norm_u + h * norm_v;
    }
  return out;
}

std::vector<Image> build_pyramid(const Image& img, int levels) {
  if (levels < 1) throw std::invalid_argument("build_pyramid: levels must be at least 1");
  std::vector<Image> pyramid{img};
  while (static_cast<int>(pyramid.size()) < levels) {
    const Image& last = pyramid.back();
    if (last.height() / 2 < 2 || last.width() / 2 < 2) break;
    pyramid.push_back(downsample2x(last));
  }
  return pyramid;
}

double LossReport::view_synthesis() const {
  double sum = 0.0;
  for (const auto& l : levels) sum += l.view_synthesis;
  return sum;
}

double LossReport::recompose() const {
  double sum = 0.0;
  for (const auto& l : levels) {
    double reg = 0.0;
    for (double r : l.regularizer) reg += r;
    sum += l.view_synthesis + l.smoothness_weight * l.smoothness + lambda_e * reg;
  }
  return sum;
}

Objective::Objective(const SnippetState& state, const LossConfig& config)
    : config_(config), layout_(state.layout) {
  config.validate();
  state.validate();
  if (config.use_explainability && !layout_.with_masks())
    throw std::invalid_argument("objective: explainability enabled but the state has no masks");
  masks_active_ = config.use_explainability;

  const int levels = layout_.num_levels();
  target_pyramid_ = build_pyramid(state.target(), levels);
  if (static_cast<int>(target_pyramid_.size()) < levels)
    throw std::invalid_argument("objective: image too small for the requested pyramid");
  source_pyramids_.assign(levels, {});
  for (int s = 0; s < state.num_sources(); ++s) {
    auto pyr = build_pyramid(state.source(s), levels);
    for (int l = 0; l < levels; ++l) source_pyramids_[l].push_back(std::move(pyr[l]));
  }
  for (int l = 0; l < levels; ++l) intrinsics_.push_back(scale_intrinsics(state.intrinsics, l));
}

LossReport Objective::evaluate(std::span<const double> params, std::span<double> grad) const {
  if (params.size() != layout_.total()) throw std::invalid_argument("objective: parameter length mismatch");
  const bool want_grad = !grad.empty();
  if (want_grad && grad.size() != layout_.total())
    throw std::invalid_argument("objective: gradient length mismatch");
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);

  const int levels = num_levels();
  const int sources = layout_.num_sources();

  Image logits(layout_.height(), layout_.width(), 1);
  std::copy_n(params.begin() + layout_.depth_offset(), layout_.depth_size(), logits.data().begin());
  std::vector<Image> depth{activate_depth(logits)};
  for (int l = 1; l < levels; ++l) depth.push_back(downsample2x(depth.back()));
  std::vector<Image> d_depth;
  for (const Image& d : depth) d_depth.emplace_back(d.height(), d.width(), 1);

  std::vector<PoseParams> poses;
  std::vector<RigidTransform> transforms;
  for (int s = 0; s < sources; ++s) {
    std::array<double, 6> a;
    std::copy_n(params.begin() + layout_.pose_offset(s), 6, a.begin());
    poses.push_back(PoseParams::from_array(a));
    transforms.push_back(pose_to_transform(poses.back()));
  }

  LossReport report;
  report.lambda_e = config_.lambda_e;
  for (int l = 0; l < levels; ++l) {
    std::vector<WarpResult> warps;
    for (int s = 0; s < sources; ++s)
      warps.push_back(inverse_warp(source_pyramids_[l][s], depth[l], transforms[s], intrinsics_[l]));

    std::vector<Image> masks;
    if (masks_active_) {
      for (int s = 0; s < sources; ++s) {
        Image m(layout_.level_height(l), layout_.level_width(l), 2);
        std::copy_n(params.begin() + layout_.mask_offset(l, s), layout_.mask_size(l), m.data().begin());
        masks.push_back(std::move(m));
      }
    }

    LevelLoss level;
    const ViewSynthesisLoss vs = view_synthesis_loss(target_pyramid_[l], warps, masks, config_.reduction);
    level.view_synthesis = vs.value;
    level.view_synthesis_per_source = vs.per_source;
    level.valid_counts = vs.valid_counts;
    report.degenerate = report.degenerate || vs.degenerate;

    const ScalarLoss smooth = smoothness_loss(depth[l], config_.reduction);
    level.smoothness = smooth.value;
    level.smoothness_weight = config_.lambda_s / static_cast<double>(1 << l);

    double reg_sum = 0.0;
    for (int s = 0; s < static_cast<int>(masks.size()); ++s) {
      const ScalarLoss reg = explainability_regularizer(masks[s], config_.reduction);
      level.regularizer.push_back(reg.value);
      reg_sum += reg.value;
      if (want_grad) {
        double* g = grad.data() + layout_.mask_offset(l, s);
        auto dvs = vs.d_mask_logits[s].data();
        auto dreg = reg.gradient.data();
        for (std::size_t k = 0; k < dvs.size(); ++k) g[k] += dvs[k] + config_.lambda_e * dreg[k];
      }
    }
    if (l == 0 && masks_active_) {
      double sum = 0.0;
      for (const Image& m : masks)
        for (double v : explainability_mask(m).data()) sum += v;
      report.mean_mask = sum / (static_cast<double>(masks.size()) * masks.front().pixel_count());
    }

    report.total += level.view_synthesis + level.smoothness_weight * level.smoothness +
                    config_.lambda_e * reg_sum;

    if (want_grad) {
      for (int s = 0; s < sources; ++s) {
        const WarpPoseGradient wg = backprop_warp(warps[s], depth[l], vs.d_warped[s], d_depth[l]);
        const auto pg = pose_gradient(poses[s], wg);
        for (int k = 0; k < 6; ++k) grad[layout_.pose_offset(s) + k] += pg[k];
      }
      auto dd = d_depth[l].data();
      auto ds = smooth.gradient.data();
      for (std::size_t k = 0; k < dd.size(); ++k) dd[k] += level.smoothness_weight * ds[k];
    }
    report.levels.push_back(std::move(level));
  }

  if (want_grad) {
    for (int l = levels - 1; l >= 1; --l) downsample2x_backward(d_depth[l], d_depth[l - 1]);
    auto lg = logits.data();
    auto dd = d_depth[0].data();
    for (std::size_t k = 0; k < lg.size(); ++k)
      grad[layout_.depth_offset() + k] = dd[k] * activate_depth_derivative(lg[k]);
  }
  return report;
}

LossReport total_loss(const SnippetState& state, const LossConfig& config, std::span<double> grad) {
  return Objective(state, config).evaluate(state.params, grad);
}

}  // namespace viewsyn
