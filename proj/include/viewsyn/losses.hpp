#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "viewsyn/image.hpp"
#include "viewsyn/sampler.hpp"
#include "viewsyn/state.hpp"

namespace viewsyn {

/// How per-pixel terms are reduced. Mean divides each term by its own pixel
/// count (valid pixels x channels for the photometric term) so the weights
/// behave the same at every pyramid level; Sum keeps raw sums.
enum class Reduction { Mean, Sum };

struct LossConfig {
  double lambda_s = 0.5;  ///< smoothness weight at full resolution; level l uses lambda_s / 2^l
  double lambda_e = 0.2;  ///< explainability regularizer weight
  int num_levels = 4;
  bool use_explainability = true;
  Reduction reduction = Reduction::Mean;

  void validate() const;
};

struct ViewSynthesisLoss {
  double value = 0.0;                     ///< summed over sources
  std::vector<double> per_source;
  std::vector<std::size_t> valid_counts;  ///< valid pixels per source
  bool degenerate = false;                ///< no valid pixel in any source
  std::vector<Image> d_warped;            ///< dL/d warped, per source
  std::vector<Image> d_mask_logits;       ///< dL/d mask logits, per source; empty without masks
};

/// Photometric L1 between `target` and every warped source, optionally
/// weighted per pixel by Ê_s = softmax(mask_logits[s])[1]. Invalid pixels
/// contribute nothing. Pass an empty `mask_logits` for the unweighted form.
ViewSynthesisLoss view_synthesis_loss(const Image& target, std::span<const WarpResult> warps,
                                      std::span<const Image> mask_logits,
                                      Reduction reduction = Reduction::Mean);

struct ScalarLoss {
  double value = 0.0;
  Image gradient;  ///< same shape as the input
};

/// Cross-entropy against the constant label 1: reduction of -log Ê(p).
ScalarLoss explainability_regularizer(const Image& mask_logits, Reduction reduction = Reduction::Mean);

/// L1 norm of second differences of a depth map along u and along v. Each
/// axis is reduced separately; an axis shorter than 3 contributes 0.
ScalarLoss smoothness_loss(const Image& depth, Reduction reduction = Reduction::Mean);

/// Level 0 is `img`; each further level is downsample2x of the previous one.
/// Stops early (returning fewer levels) once a side would drop below 2.
std::vector<Image> build_pyramid(const Image& img, int levels);

struct LevelLoss {
  double view_synthesis = 0.0;
  std::vector<double> view_synthesis_per_source;
  std::vector<std::size_t> valid_counts;
  double smoothness = 0.0;
  double smoothness_weight = 0.0;
  std::vector<double> regularizer;  ///< per source; empty when masks are off
};

struct LossReport {
  double total = 0.0;
  double lambda_e = 0.0;
  std::vector<LevelLoss> levels;
  bool degenerate = false;   ///< some level had no valid pixel in any source
  double mean_mask = 1.0;    ///< mean Ê over sources at level 0 (1 without masks)

  double view_synthesis() const;
  /// Sum of the weighted components, in the same order used for `total`.
  double recompose() const;
};

/// The multi-scale objective for one snippet, with image pyramids cached so
/// repeated evaluations only redo the parameter-dependent work.
class Objective {
 public:
  Objective(const SnippetState& state, const LossConfig& config);

  /// Evaluates the loss at `params` (laid out per layout()). When `grad` is
  /// non-empty it is overwritten with dL/dparams.
  LossReport evaluate(std::span<const double> params, std::span<double> grad = {}) const;

  const ParameterLayout& layout() const { return layout_; }
  const LossConfig& config() const { return config_; }
  int num_levels() const { return static_cast<int>(target_pyramid_.size()); }

 private:
  LossConfig config_;
  ParameterLayout layout_;
  bool masks_active_ = false;
  std::vector<Intrinsics> intrinsics_;
  std::vector<Image> target_pyramid_;
  std::vector<std::vector<Image>> source_pyramids_;  ///< [level][source]
};

LossReport total_loss(const SnippetState& state, const LossConfig& config, std::span<double> grad = {});

}  // namespace viewsyn
