#include "viewsyn/state.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace viewsyn {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double activate_depth(double logit) { return 1.0 / (kDepthAlpha * sigmoid(logit) + kDepthBeta); }

double activate_depth_derivative(double logit) {
  const double s = sigmoid(logit);
  const double d = 1.0 / (kDepthAlpha * s + kDepthBeta);
  return -kDepthAlpha * s * (1.0 - s) * d * d;
}

double depth_to_logit(double depth) {
  const double s = (1.0 / depth - kDepthBeta) / kDepthAlpha;
  if (!(s > 0.0 && s < 1.0))
    throw std::invalid_argument("depth_to_logit: depth " + std::to_string(depth) +
                                " outside the activation range");
  return std::log(s) - std::log1p(-s);
}

Image activate_depth(const Image& logits) {
  Image out(logits.height(), logits.width(), logits.channels());
  auto src = logits.data();
  auto dst = out.data();
  for (std::size_t k = 0; k < src.size(); ++k) dst[k] = activate_depth(src[k]);
  return out;
}

Image explainability_mask(const Image& logits) {
  if (logits.channels() != 2) throw std::invalid_argument("explainability_mask: expected 2 channels");
  Image out(logits.height(), logits.width(), 1);
  for (int i = 0; i < logits.height(); ++i)
    for (int j = 0; j < logits.width(); ++j)
      out.at(i, j) = sigmoid(logits.at(i, j, 1) - logits.at(i, j, 0));
  return out;
}

ParameterLayout::ParameterLayout(int height, int width, int num_sources, int num_levels, bool with_masks)
    : height_(height), width_(width), num_sources_(num_sources), num_levels_(num_levels),
      with_masks_(with_masks) {
  if (height <= 0 || width <= 0 || num_sources < 1 || num_levels < 1)
    throw std::invalid_argument("parameter layout: invalid dimensions");
  std::size_t offset = depth_size() + 6 * static_cast<std::size_t>(num_sources);
  for (int l = 0; l < num_levels; ++l) {
    level_mask_offsets_.push_back(offset);
    if (with_masks) offset += mask_size(l) * num_sources;
  }
  total_ = offset;
}

std::size_t ParameterLayout::mask_size(int level) const {
  return static_cast<std::size_t>(level_height(level)) * level_width(level) * 2;
}

std::size_t ParameterLayout::mask_offset(int level, int source) const {
  if (!with_masks_) throw std::logic_error("parameter layout: no mask parameters");
  return level_mask_offsets_.at(level) + mask_size(level) * source;
}

Image SnippetState::depth_logits() const {
  Image out(layout.height(), layout.width(), 1);
  std::copy_n(params.begin() + layout.depth_offset(), layout.depth_size(), out.data().begin());
  return out;
}

PoseParams SnippetState::pose(int s) const {
  std::array<double, 6> a;
  std::copy_n(params.begin() + layout.pose_offset(s), 6, a.begin());
  return PoseParams::from_array(a);
}

void SnippetState::set_pose(int s, const PoseParams& p) {
  const auto a = p.as_array();
  std::copy(a.begin(), a.end(), params.begin() + layout.pose_offset(s));
}

Image SnippetState::mask_logits(int level, int s) const {
  Image out(layout.level_height(level), layout.level_width(level), 2);
  std::copy_n(params.begin() + layout.mask_offset(level, s), layout.mask_size(level), out.data().begin());
  return out;
}

void SnippetState::validate() const {
  if (frames.size() < 2) throw std::invalid_argument("snippet: need at least two frames");
  if (target_index < 0 || target_index >= static_cast<int>(frames.size()))
    throw std::invalid_argument("snippet: target index out of range");
  for (const Image& f : frames)
    if (!f.same_shape(frames.front())) throw std::invalid_argument("snippet: frames differ in size");
  if (intrinsics.width != frames.front().width() || intrinsics.height != frames.front().height())
    throw std::invalid_argument("snippet: intrinsics do not match the frames");
  if (layout.height() != frames.front().height() || layout.width() != frames.front().width() ||
      layout.num_sources() != num_sources())
    throw std::invalid_argument("snippet: parameter layout does not match the frames");
  if (params.size() != layout.total())
    throw std::invalid_argument("snippet: parameter vector has the wrong length");
}

}  // namespace viewsyn
