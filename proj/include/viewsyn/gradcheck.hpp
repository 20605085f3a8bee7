#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "viewsyn/losses.hpp"
#include "viewsyn/state.hpp"

namespace viewsyn {

struct GradCheckOptions {
  int height = 8;
  int width = 12;
  int frames = 3;
  int levels = 2;
  int channels = 1;
  double step = 1e-5;
  std::uint64_t seed = 0;
  /// Negative control: perturbs the analytic gradient before comparing.
  bool inject_fault = false;
  /// Redraw until central differences cannot straddle a sampling kink.
  /// Only feasible for small images.
  bool avoid_kinks = true;
};

/// Random snippet: uniform-noise frames, depths in [1, 3], small random
/// poses, standard-normal mask logits. With `avoid_kinks`, depths and poses
/// are redrawn until no warped sample lies within a few `step`-sized
/// displacements of a pixel grid line, where bilinear sampling has a kink.
SnippetState random_instance(const GradCheckOptions& options, bool with_masks = true);

struct GradCheckGroup {
  std::string name;
  std::size_t count = 0;
  double max_abs_error = 0.0;
  /// max |analytic - numeric| / max |numeric| over the group
  double rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckGroup> groups;
  bool passed(double tolerance) const;
};

/// Compares the analytic gradient of the total loss against central
/// differences, grouped into depth logits, pose parameters and mask logits.
GradCheckReport check_gradients(const SnippetState& state, const LossConfig& config, double step,
                                bool inject_fault = false);

}  // namespace viewsyn
