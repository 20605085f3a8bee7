#include "viewsyn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Core>

namespace viewsyn {

namespace {

struct Wave {
  double fa, fb;  // cycles per scene unit along the plane's two axes
  double phase;
  double amplitude;
};

using Texture = std::vector<std::vector<Wave>>;  // per channel

Texture make_texture(std::uint64_t seed, int channels, TextureMode mode, double fx, double ref_depth) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // Band in cycles per pixel at the reference depth.
  const double lo = mode == TextureMode::BandLimited ? 0.01 : 0.30;
  const double hi = mode == TextureMode::BandLimited ? 0.04 : 0.45;
  constexpr int kWaves = 6;
  Texture tex(channels);
  for (auto& waves : tex) {
    for (int k = 0; k < kWaves; ++k) {
      const double cycles_per_unit = (lo + (hi - lo) * unit(rng)) * fx / ref_depth;
      // One orientation per stratum keeps the texture isotropic, so motion
      // along every image axis is observable.
      const double angle = M_PI * (k + unit(rng)) / kWaves;
      waves.push_back({cycles_per_unit * std::cos(angle), cycles_per_unit * std::sin(angle),
                       2.0 * M_PI * unit(rng), 0.45 / kWaves});
    }
  }
  return tex;
}

double shade(const std::vector<Wave>& waves, double a, double b) {
  double v = 0.5;
  for (const Wave& w : waves) v += w.amplitude * std::sin(2.0 * M_PI * (w.fa * a + w.fb * b) + w.phase);
  return v;
}

struct Hit {
  double camera_depth;
  double a, b;  // texture coordinates on the plane
  int plane;
};

class Scene {
 public:
  explicit Scene(const SceneSpec& spec) : spec_(spec) {
    const double ref = spec.depth;
    const double fx = spec.intrinsics.fx;
    textures_.push_back(make_texture(spec.texture_seed, spec.channels, spec.texture, fx, ref));
    if (spec.kind == SceneKind::TwoPlanes)
      textures_.push_back(make_texture(spec.texture_seed + 0x9e3779b97f4a7c15ULL, spec.channels, spec.texture, fx,
                                       spec.far_depth));
  }

  // Intersects a world ray (origin c, direction r with camera-frame z = 1).
  Hit intersect(const Eigen::Vector3d& c, const Eigen::Vector3d& r) const {
    switch (spec_.kind) {
      case SceneKind::Plane:
        return fronto(c, r, spec_.depth, 0);
      case SceneKind::SlantedPlane: {
        const double s = std::sin(spec_.slant), co = std::cos(spec_.slant);
        const Eigen::Vector3d n(0.0, -s, co), origin(0.0, 0.0, spec_.depth);
        const Eigen::Vector3d e2(0.0, co, s);
        const double lambda = n.dot(origin - c) / n.dot(r);
        check(lambda);
        const Eigen::Vector3d x = c + lambda * r;
        return {lambda, x.x(), (x - origin).dot(e2), 0};
      }
      case SceneKind::TwoPlanes: {
        const Hit near = fronto(c, r, spec_.depth, 0, false);
        if (near.camera_depth > 0.0 && near.a < spec_.edge_x) return near;
        return fronto(c, r, spec_.far_depth, 1);
      }
    }
    throw std::logic_error("unknown scene kind");
  }

  double value(const Hit& h, int channel) const { return shade(textures_[h.plane][channel], h.a, h.b); }

 private:
  static void check(double lambda) {
    if (!std::isfinite(lambda) || !(lambda > kMinSourceDepth))
      throw std::invalid_argument("render_scene: scene surface is behind the camera");
  }

  static Hit fronto(const Eigen::Vector3d& c, const Eigen::Vector3d& r, double z, int plane, bool strict = true) {
    const double lambda = (z - c.z()) / r.z();
    if (strict) check(lambda);
    const Eigen::Vector3d x = c + lambda * r;
    return {lambda, x.x(), x.y(), plane};
  }

  const SceneSpec& spec_;
  std::vector<Texture> textures_;
};

}  // namespace

void SceneSpec::validate() const {
  intrinsics.validate();
  if (trajectory.size() < 2) throw std::invalid_argument("scene: trajectory needs at least two poses");
  if (!(depth > 0.0) || (kind == SceneKind::TwoPlanes && !(far_depth > depth)))
    throw std::invalid_argument("scene: plane depths must be positive (and far_depth > depth)");
  if (channels != 1 && channels != 3) throw std::invalid_argument("scene: channels must be 1 or 3");
  if (noise_sigma < 0.0) throw std::invalid_argument("scene: noise sigma must be non-negative");
  if (target_index >= static_cast<int>(trajectory.size()))
    throw std::invalid_argument("scene: target index out of range");
}

Intrinsics default_intrinsics(int width, int height) {
  Intrinsics K;
  K.width = width;
  K.height = height;
  K.fx = K.fy = width / 2.0;
  K.cx = (width - 1) / 2.0;
  K.cy = (height - 1) / 2.0;
  return K;
}

std::vector<PoseParams> linear_trajectory(int frames, const PoseParams& step) {
  std::vector<PoseParams> out;
  for (int k = 0; k < frames; ++k) {
    const auto s = step.as_array();
    std::array<double, 6> p;
    for (int i = 0; i < 6; ++i) p[i] = k * s[i];
    out.push_back(PoseParams::from_array(p));
  }
  return out;
}

RigidTransform relative_pose(const RigidTransform& world_from_target, const RigidTransform& world_from_source) {
  return invert(world_from_source) * world_from_target;
}

SnippetSequence render_scene(const SceneSpec& spec) {
  spec.validate();
  const Scene scene(spec);
  const Intrinsics& K = spec.intrinsics;

  SnippetSequence seq;
  seq.intrinsics = K;
  seq.target_index = spec.target_index < 0 ? static_cast<int>(spec.trajectory.size()) / 2 : spec.target_index;
  std::mt19937_64 noise_rng(spec.texture_seed ^ 0x5deece66dULL);
  std::normal_distribution<double> noise(0.0, spec.noise_sigma > 0.0 ? spec.noise_sigma : 1.0);

  for (const PoseParams& p : spec.trajectory) {
    const RigidTransform world_from_camera = pose_to_transform(p);
    Image frame(K.height, K.width, spec.channels);
    Image depth(K.height, K.width, 1);
    for (int i = 0; i < K.height; ++i)
      for (int j = 0; j < K.width; ++j) {
        const Eigen::Vector3d ray((j - K.cx) / K.fx, (i - K.cy) / K.fy, 1.0);
        const Hit hit = scene.intersect(world_from_camera.translation(), world_from_camera.rotation() * ray);
        depth.at(i, j) = hit.camera_depth;
        for (int c = 0; c < spec.channels; ++c) frame.at(i, j, c) = scene.value(hit, c);
      }
    if (spec.noise_sigma > 0.0)
      for (double& v : frame.data()) v = std::clamp(v + noise(noise_rng), 0.0, 1.0);
    seq.frames.push_back(std::move(frame));
    seq.gt_depth.push_back(std::move(depth));
    seq.gt_poses.push_back(world_from_camera);
  }
  return seq;
}

}  // namespace viewsyn
