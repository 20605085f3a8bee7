#include "viewsyn/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace viewsyn {

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0))
    throw std::invalid_argument("intrinsics: focal lengths must be positive");
  if (width <= 0 || height <= 0)
    throw std::invalid_argument("intrinsics: image dimensions must be positive");
  if (!(cx > 0.0 && cx < width) || !(cy > 0.0 && cy < height))
    throw std::invalid_argument("intrinsics: principal point outside the image");
}

Eigen::Matrix3d rotation_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d r;
  r << 1, 0, 0,
       0, c, -s,
       0, s, c;
  return r;
}

Eigen::Matrix3d rotation_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d r;
  r << c, 0, s,
       0, 1, 0,
       -s, 0, c;
  return r;
}

Eigen::Matrix3d rotation_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d r;
  r << c, -s, 0,
       s, c, 0,
       0, 0, 1;
  return r;
}

RigidTransform RigidTransform::from_matrix(const Eigen::Matrix4d& m) {
  const Eigen::Matrix3d r = m.topLeftCorner<3, 3>();
  if ((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
      std::abs(r.determinant() - 1.0) > 1e-9)
    throw std::invalid_argument("rigid transform: rotation block is not a proper rotation");
  if (m(3, 0) != 0.0 || m(3, 1) != 0.0 || m(3, 2) != 0.0 || m(3, 3) != 1.0)
    throw std::invalid_argument("rigid transform: bottom row must be (0, 0, 0, 1)");
  return {r, m.topRightCorner<3, 1>()};
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

RigidTransform pose_to_transform(const PoseParams& p) {
  for (double x : p.as_array())
    if (!std::isfinite(x)) throw std::invalid_argument("pose_to_transform: non-finite pose parameter");
  const Eigen::Matrix3d r = rotation_z(p.rz) * rotation_y(p.ry) * rotation_x(p.rx);
  return {r, Eigen::Vector3d(p.tx, p.ty, p.tz)};
}

PoseParams transform_to_pose(const RigidTransform& t) {
  const Eigen::Matrix3d& r = t.rotation();
  PoseParams p;
  p.ry = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  p.rx = std::atan2(r(2, 1), r(2, 2));
  p.rz = std::atan2(r(1, 0), r(0, 0));
  p.tx = t.translation().x();
  p.ty = t.translation().y();
  p.tz = t.translation().z();
  return p;
}

std::array<Eigen::Matrix3d, 3> rotation_derivatives(const PoseParams& p) {
  const Eigen::Matrix3d rx = rotation_x(p.rx), ry = rotation_y(p.ry), rz = rotation_z(p.rz);
  const double cx = std::cos(p.rx), sx = std::sin(p.rx);
  const double cy = std::cos(p.ry), sy = std::sin(p.ry);
  const double cz = std::cos(p.rz), sz = std::sin(p.rz);
  Eigen::Matrix3d drx, dry, drz;
  drx << 0, 0, 0,
         0, -sx, -cx,
         0, cx, -sx;
  dry << -sy, 0, cy,
         0, 0, 0,
         -cy, 0, -sy;
  drz << -sz, -cz, 0,
         cz, -sz, 0,
         0, 0, 0;
  return {rz * ry * drx, rz * dry * rx, drz * ry * rx};
}

RigidTransform invert(const RigidTransform& t) {
  const Eigen::Matrix3d rt = t.rotation().transpose();
  return {rt, -(rt * t.translation())};
}

Projection project(const PixelCoord& p_t, double depth, const Intrinsics& K, const RigidTransform& t) {
  const double xn = (p_t.u - K.cx) / K.fx;
  const double yn = (p_t.v - K.cy) / K.fy;
  const Eigen::Vector3d target_point(depth * xn, depth * yn, depth);
  const Eigen::Vector3d source_point = t.apply(target_point);

  Projection out;
  out.source_point = source_point;
  out.source_depth = source_point.z();
  if (!(source_point.z() > kMinSourceDepth)) return out;

  const double du = K.fx * (source_point.x() / source_point.z() - target_point.x() / target_point.z());
  const double dv = K.fy * (source_point.y() / source_point.z() - target_point.y() / target_point.z());
  out.pixel = {p_t.u + du, p_t.v + dv};
  out.valid = std::isfinite(out.pixel.u) && std::isfinite(out.pixel.v);
  return out;
}

Intrinsics scale_intrinsics(const Intrinsics& K, int level) {
  if (level < 0) throw std::invalid_argument("scale_intrinsics: level must be non-negative");
  if (level == 0) return K;
  if (level >= 30) throw std::invalid_argument("scale_intrinsics: level too large");
  const double factor = static_cast<double>(1 << level);
  Intrinsics out = K;
  out.fx = K.fx / factor;
  out.fy = K.fy / factor;
  out.cx = (K.cx + 0.5) / factor - 0.5;
  out.cy = (K.cy + 0.5) / factor - 0.5;
  out.width = K.width >> level;
  out.height = K.height >> level;
  if (out.width < 2 || out.height < 2)
    throw std::invalid_argument("scale_intrinsics: level " + std::to_string(level) +
                                " yields an image smaller than 2x2");
  return out;
}

}  // namespace viewsyn
