#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "viewsyn/geometry.hpp"
#include "viewsyn/image.hpp"

namespace viewsyn {

/// Depth activation D = 1 / (alpha * sigmoid(x) + beta). Keeps every depth
/// inside (1 / (alpha + beta), 1 / beta).
inline constexpr double kDepthAlpha = 10.0;
inline constexpr double kDepthBeta = 0.01;

double activate_depth(double logit);
/// dD/dx of activate_depth.
double activate_depth_derivative(double logit);
/// Logit whose activation is `depth`; throws std::invalid_argument outside
/// the representable range.
double depth_to_logit(double depth);
Image activate_depth(const Image& logits);

/// Ê = softmax(logits)[1] per pixel for an H x W x 2 logit grid.
Image explainability_mask(const Image& logits);

/// Offsets of each parameter group inside the flat parameter vector:
/// [depth logits (H*W) | pose 6 per source | mask logits per level per source].
class ParameterLayout {
 public:
  ParameterLayout() = default;
  ParameterLayout(int height, int width, int num_sources, int num_levels, bool with_masks);

  int height() const { return height_; }
  int width() const { return width_; }
  int num_sources() const { return num_sources_; }
  int num_levels() const { return num_levels_; }
  bool with_masks() const { return with_masks_; }
  int level_height(int level) const { return height_ >> level; }
  int level_width(int level) const { return width_ >> level; }

  std::size_t depth_offset() const { return 0; }
  std::size_t depth_size() const { return static_cast<std::size_t>(height_) * width_; }
  std::size_t pose_offset(int source) const { return depth_size() + 6 * static_cast<std::size_t>(source); }
  std::size_t mask_offset(int level, int source) const;
  std::size_t mask_size(int level) const;
  std::size_t total() const { return total_; }

  bool operator==(const ParameterLayout&) const = default;

 private:
  int height_ = 0, width_ = 0, num_sources_ = 0, num_levels_ = 0;
  bool with_masks_ = false;
  std::vector<std::size_t> level_mask_offsets_;
  std::size_t total_ = 0;
};

/// One snippet under optimization: the frames, the camera, and the flat
/// parameter vector described by `layout`.
struct SnippetState {
  std::vector<Image> frames;
  int target_index = 0;
  Intrinsics intrinsics;
  ParameterLayout layout;
  std::vector<double> params;

  const Image& target() const { return frames.at(target_index); }
  int num_sources() const { return static_cast<int>(frames.size()) - 1; }
  /// Frame index of source `s` (sources are the non-target frames in order).
  int source_frame(int s) const { return s < target_index ? s : s + 1; }
  const Image& source(int s) const { return frames.at(source_frame(s)); }

  Image depth_logits() const;
  Image depth() const { return activate_depth(depth_logits()); }
  PoseParams pose(int s) const;
  void set_pose(int s, const PoseParams& p);
  Image mask_logits(int level, int s) const;
  Image mask(int level, int s) const { return explainability_mask(mask_logits(level, s)); }

  /// Throws std::invalid_argument when frames, intrinsics and layout disagree.
  void validate() const;
};

}  // namespace viewsyn
