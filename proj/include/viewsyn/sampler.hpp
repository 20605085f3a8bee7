#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "viewsyn/geometry.hpp"
#include "viewsyn/image.hpp"

namespace viewsyn {

/// Bilinear lookup of every channel of `img` at `p`, together with the
/// partial derivatives of each value with respect to u and v.
///
/// Coordinates outside [0, width-1] x [0, height-1] are not interpolable:
/// the function returns false and writes zeros. Cells are assigned with
/// floor(), so at integer coordinates the derivative is the right-sided one
/// (the last row/column uses the cell to its left).
bool bilinear_sample(const Image& img, const PixelCoord& p, std::span<double> value,
                     std::span<double> d_du, std::span<double> d_dv);

struct BilinearSample {
  bool valid = false;
  std::vector<double> value;
  std::vector<double> d_du;
  std::vector<double> d_dv;
};

BilinearSample bilinear_sample(const Image& img, const PixelCoord& p);

/// Source image resampled onto the target grid plus the per-pixel state
/// needed to backpropagate into depth and pose.
struct WarpResult {
  Image warped;                      ///< H x W x C, zero where invalid
  std::vector<std::uint8_t> valid;   ///< H x W, 1 where interpolable
  Image d_du;                        ///< d warped / d u_s, H x W x C
  Image d_dv;                        ///< d warped / d v_s, H x W x C
  std::vector<Eigen::Vector3d> source_points;  ///< target point expressed in the source camera
  Intrinsics intrinsics;
  RigidTransform pose;
  std::size_t valid_count = 0;
};

/// For every target pixel, projects through `depth` and `pose` (target to
/// source) and samples `src` bilinearly. Throws std::invalid_argument on a
/// shape mismatch or a non-positive depth.
WarpResult inverse_warp(const Image& src, const Image& depth, const RigidTransform& pose,
                        const Intrinsics& K);

/// Gradient of a scalar loss with respect to the rotation matrix entries and
/// the translation of the warp pose.
struct WarpPoseGradient {
  Eigen::Matrix3d d_rotation = Eigen::Matrix3d::Zero();
  Eigen::Vector3d d_translation = Eigen::Vector3d::Zero();
};

/// Pulls dL/d(warped) back through the sampler and the projection. The depth
/// gradient is added into `d_depth` (H x W x 1); the pose gradient is returned.
WarpPoseGradient backprop_warp(const WarpResult& warp, const Image& depth, const Image& d_warped,
                               Image& d_depth);

/// Chains a WarpPoseGradient through pose_to_transform.
std::array<double, 6> pose_gradient(const PoseParams& pose, const WarpPoseGradient& g);

}  // namespace viewsyn
