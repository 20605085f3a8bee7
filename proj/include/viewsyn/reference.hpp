#pragma once

// Straightforward single-threaded versions of the hot kernels. They share
// no code with the OpenMP kernels beyond the data types: projection uses the
// plain u = fx X / Z + cx form, pose gradients go through a per-pixel 2x6
// Jacobian, and reductions are single running sums.

#include <array>
#include <span>
#include <vector>

#include "viewsyn/losses.hpp"
#include "viewsyn/sampler.hpp"
#include "viewsyn/state.hpp"

namespace viewsyn::reference {

WarpResult inverse_warp(const Image& src, const Image& depth, const RigidTransform& pose, const Intrinsics& K);

/// Adds the depth gradient into `d_depth` and returns dL/d(rx, ry, rz, tx, ty, tz).
std::array<double, 6> backprop_warp(const WarpResult& warp, const PoseParams& pose, const Image& depth,
                                    const Image& d_warped, Image& d_depth);

ViewSynthesisLoss view_synthesis_loss(const Image& target, std::span<const WarpResult> warps,
                                      std::span<const Image> mask_logits, Reduction reduction = Reduction::Mean);

ScalarLoss smoothness_loss(const Image& depth, Reduction reduction = Reduction::Mean);
ScalarLoss explainability_regularizer(const Image& mask_logits, Reduction reduction = Reduction::Mean);

LossReport total_loss(const SnippetState& state, const LossConfig& config, std::span<double> grad = {});

}  // namespace viewsyn::reference
