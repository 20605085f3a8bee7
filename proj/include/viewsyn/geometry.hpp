#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

namespace viewsyn {

/// Pinhole camera. Pixel (row i, col j) sits at continuous coordinate
/// (u, v) = (j, i); the camera frame is x right, y down, z forward.
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Throws std::invalid_argument unless fx, fy > 0 and the principal
  /// point lies strictly inside the image.
  void validate() const;
};

/// Six-parameter pose: Euler angles (radians) and a translation.
/// The rotation is R = Rz(rz) * Ry(ry) * Rx(rx).
struct PoseParams {
  double rx = 0.0, ry = 0.0, rz = 0.0;
  double tx = 0.0, ty = 0.0, tz = 0.0;

  std::array<double, 6> as_array() const { return {rx, ry, rz, tx, ty, tz}; }
  static PoseParams from_array(const std::array<double, 6>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5]};
  }
};

struct PixelCoord {
  double u = 0.0;
  double v = 0.0;
};

/// Rigid-body transform [R | t]. Maps points x to R x + t.
class RigidTransform {
 public:
  RigidTransform() : rotation_(Eigen::Matrix3d::Identity()), translation_(Eigen::Vector3d::Zero()) {}
  RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
      : rotation_(rotation), translation_(translation) {}

  static RigidTransform identity() { return {}; }
  /// Builds from a 4x4 matrix; throws std::invalid_argument if the
  /// rotation block is not orthonormal (1e-9) or the bottom row is not (0,0,0,1).
  static RigidTransform from_matrix(const Eigen::Matrix4d& m);

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }
  Eigen::Matrix4d matrix() const;

  Eigen::Vector3d apply(const Eigen::Vector3d& x) const { return rotation_ * x + translation_; }
  RigidTransform operator*(const RigidTransform& other) const {
    return {rotation_ * other.rotation_, rotation_ * other.translation_ + translation_};
  }

 private:
  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
};

/// Camera-to-world poses in frame order.
using Trajectory = std::vector<RigidTransform>;

Eigen::Matrix3d rotation_x(double angle);
Eigen::Matrix3d rotation_y(double angle);
Eigen::Matrix3d rotation_z(double angle);

/// Throws std::invalid_argument on non-finite input.
RigidTransform pose_to_transform(const PoseParams& p);

/// Inverse of pose_to_transform (ZYX Euler extraction, ry in [-pi/2, pi/2]).
PoseParams transform_to_pose(const RigidTransform& t);

/// Partial derivatives of R(rx, ry, rz) with respect to rx, ry, rz.
std::array<Eigen::Matrix3d, 3> rotation_derivatives(const PoseParams& p);

RigidTransform invert(const RigidTransform& t);

/// Source-frame z at or below this value marks a projection invalid.
inline constexpr double kMinSourceDepth = 1e-6;

struct Projection {
  PixelCoord pixel;
  double source_depth = 0.0;
  Eigen::Vector3d source_point = Eigen::Vector3d::Zero();
  bool valid = false;  ///< false when the point lands at or behind the source camera
};

/// Back-projects p_t at `depth`, moves it by `t`, and re-projects with K.
/// The result is computed as an offset from p_t so an identity transform
/// reproduces p_t exactly.
Projection project(const PixelCoord& p_t, double depth, const Intrinsics& K, const RigidTransform& t);

/// Intrinsics of the 2^level downsampled image: fx and fy are divided by
/// 2^level, the principal point is moved so pixel centres keep their rays
/// (c' = (c + 0.5) / 2^level - 0.5), and width and height are shifted right.
/// Throws std::invalid_argument if level < 0 or a dimension drops below 2.
Intrinsics scale_intrinsics(const Intrinsics& K, int level);

}  // namespace viewsyn
