#include <cmath>
#include <stdexcept>

#include "viewsyn/reference.hpp"

namespace viewsyn::reference {

WarpResult inverse_warp(const Image& src, const Image& depth, const RigidTransform& pose, const Intrinsics& K) {
  if (depth.height() != src.height() || depth.width() != src.width() || K.width != src.width() ||
      K.height != src.height())
    throw std::invalid_argument("reference::inverse_warp: shape mismatch");
  const int h = src.height(), w = src.width(), nc = src.channels();
  WarpResult out;
  out.warped = Image(h, w, nc);
  out.d_du = Image(h, w, nc);
  out.d_dv = Image(h, w, nc);
  out.valid.assign(src.pixel_count(), 0);
  out.source_points.assign(src.pixel_count(), Eigen::Vector3d::Zero());
  out.intrinsics = K;
  out.pose = pose;

  const Eigen::Matrix3d& R = pose.rotation();
  const Eigen::Vector3d& t = pose.translation();
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      const double d = depth.at(i, j);
      if (!(d > 0.0)) throw std::invalid_argument("reference::inverse_warp: non-positive depth");
      const Eigen::Vector3d p(d * (j - K.cx) / K.fx, d * (i - K.cy) / K.fy, d);
      const Eigen::Vector3d q = R * p + t;
      const std::size_t px = static_cast<std::size_t>(i) * w + j;
      out.source_points[px] = q;
      if (q.z() <= kMinSourceDepth) continue;
      const double u = K.fx * q.x() / q.z() + K.cx;
      const double v = K.fy * q.y() / q.z() + K.cy;
      if (u < 0.0 || u > w - 1 || v < 0.0 || v > h - 1) continue;
      int x0 = static_cast<int>(std::floor(u)), y0 = static_cast<int>(std::floor(v));
      if (x0 == w - 1) x0 = w - 2;
      if (y0 == h - 1) y0 = h - 2;
      const double a = u - x0, b = v - y0;
      for (int c = 0; c < nc; ++c) {
        const double tl = src.at(y0, x0, c), tr = src.at(y0, x0 + 1, c);
        const double bl = src.at(y0 + 1, x0, c), br = src.at(y0 + 1, x0 + 1, c);
        const double top = tl + a * (tr - tl), bottom = bl + a * (br - bl);
        out.warped.at(i, j, c) = top + b * (bottom - top);
        out.d_du.at(i, j, c) = (tr - tl) + b * ((br - bl) - (tr - tl));
        out.d_dv.at(i, j, c) = bottom - top;
      }
      out.valid[px] = 1;
      ++out.valid_count;
    }
  return out;
}

std::array<double, 6> backprop_warp(const WarpResult& warp, const PoseParams& pose, const Image& depth,
                                    const Image& d_warped, Image& d_depth) {
  const Intrinsics& K = warp.intrinsics;
  const auto dR = rotation_derivatives(pose);
  const Eigen::Matrix3d& R = warp.pose.rotation();
  const int h = depth.height(), w = depth.width(), nc = warp.warped.channels();
  std::array<double, 6> grad{};
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      const std::size_t px = static_cast<std::size_t>(i) * w + j;
      if (!warp.valid[px]) continue;
      const Eigen::Vector3d& q = warp.source_points[px];
      // d(u, v)/dq
      Eigen::Matrix<double, 2, 3> dproj;
      dproj << K.fx / q.z(), 0.0, -K.fx * q.x() / (q.z() * q.z()),
               0.0, K.fy / q.z(), -K.fy * q.y() / (q.z() * q.z());
      const Eigen::Vector3d ray((j - K.cx) / K.fx, (i - K.cy) / K.fy, 1.0);
      const Eigen::Vector3d p = depth.at(i, j) * ray;
      Eigen::Matrix<double, 3, 7> dq;  // columns: rx, ry, rz, tx, ty, tz, depth
      for (int k = 0; k < 3; ++k) dq.col(k) = dR[k] * p;
      dq.block<3, 3>(0, 3).setIdentity();
      dq.col(6) = R * ray;
      const Eigen::Matrix<double, 2, 7> duv = dproj * dq;
      for (int c = 0; c < nc; ++c) {
        const double g = d_warped.at(i, j, c);
        const Eigen::Matrix<double, 1, 7> row =
            g * (warp.d_du.at(i, j, c) * duv.row(0) + warp.d_dv.at(i, j, c) * duv.row(1));
        for (int k = 0; k < 6; ++k) grad[k] += row(k);
        d_depth.at(i, j) += row(6);
      }
    }
  return grad;
}

}  // namespace viewsyn::reference
