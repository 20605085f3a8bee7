#pragma once

#include <cstdint>
#include <vector>

#include "viewsyn/geometry.hpp"
#include "viewsyn/io.hpp"

namespace viewsyn {

enum class SceneKind {
  Plane,         ///< textured fronto-parallel plane at `depth`
  SlantedPlane,  ///< plane through (0, 0, depth) tilted by `slant` about the x axis
  TwoPlanes,     ///< foreground plane at `depth` for world x < `edge_x`, background at `far_depth`
};

enum class TextureMode {
  BandLimited,    ///< smooth sinusoid mixture, wavelengths of tens of pixels
  HighFrequency,  ///< wavelengths of 2-3 pixels; photometric gradients are only locally informative
};

/// Procedural scene with closed-form ground truth. World units are
/// arbitrary "scene units"; the trajectory gives each frame's
/// camera-to-world pose.
struct SceneSpec {
  SceneKind kind = SceneKind::Plane;
  TextureMode texture = TextureMode::BandLimited;
  std::uint64_t texture_seed = 1;
  double depth = 4.0;
  double far_depth = 8.0;
  double slant = 0.3;
  double edge_x = 0.0;
  std::vector<PoseParams> trajectory;
  Intrinsics intrinsics;
  int channels = 1;
  double noise_sigma = 0.0;
  int target_index = -1;  ///< -1 picks the central frame

  void validate() const;
};

/// Default desk-scale camera: 96 x 64, wide field of view, centred principal point.
Intrinsics default_intrinsics(int width = 96, int height = 64);

/// Frame k gets k * `step` (angles and translation scaled by k).
std::vector<PoseParams> linear_trajectory(int frames, const PoseParams& step);

/// Renders every frame by intersecting each pixel's ray with the scene and
/// evaluating the texture there. Ground-truth depth maps and poses are
/// attached. Throws std::invalid_argument if the scene is behind (or
/// parallel to) any pixel ray.
SnippetSequence render_scene(const SceneSpec& spec);

/// T_{target -> source} for camera-to-world poses.
RigidTransform relative_pose(const RigidTransform& world_from_target, const RigidTransform& world_from_source);

}  // namespace viewsyn
