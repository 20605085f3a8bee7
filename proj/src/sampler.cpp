#include "viewsyn/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace viewsyn {

bool bilinear_sample(const Image& img, const PixelCoord& p, std::span<double> value,
                     std::span<double> d_du, std::span<double> d_dv) {
  const int channels = img.channels();
  const double max_u = img.width() - 1, max_v = img.height() - 1;
  if (img.empty() || !(p.u >= 0.0 && p.u <= max_u && p.v >= 0.0 && p.v <= max_v)) {
    std::fill(value.begin(), value.begin() + channels, 0.0);
    std::fill(d_du.begin(), d_du.begin() + channels, 0.0);
    std::fill(d_dv.begin(), d_dv.begin() + channels, 0.0);
    return false;
  }

  const int j0 = std::min(static_cast<int>(std::floor(p.u)), std::max(img.width() - 2, 0));
  const int i0 = std::min(static_cast<int>(std::floor(p.v)), std::max(img.height() - 2, 0));
  const int j1 = std::min(j0 + 1, img.width() - 1);
  const int i1 = std::min(i0 + 1, img.height() - 1);
  const double fu = p.u - j0, fv = p.v - i0;

  const double w00 = (1.0 - fu) * (1.0 - fv);
  const double w01 = fu * (1.0 - fv);
  const double w10 = (1.0 - fu) * fv;
  const double w11 = fu * fv;
  for (int c = 0; c < channels; ++c) {
    const double v00 = img.at(i0, j0, c), v01 = img.at(i0, j1, c);
    const double v10 = img.at(i1, j0, c), v11 = img.at(i1, j1, c);
    value[c] = w00 * v00 + w01 * v01 + w10 * v10 + w11 * v11;
    d_du[c] = j1 == j0 ? 0.0 : (1.0 - fv) * (v01 - v00) + fv * (v11 - v10);
    d_dv[c] = i1 == i0 ? 0.0 : (1.0 - fu) * (v10 - v00) + fu * (v11 - v01);
  }
  return true;
}

BilinearSample bilinear_sample(const Image& img, const PixelCoord& p) {
  if (img.empty()) throw std::invalid_argument("bilinear_sample: empty image");
  BilinearSample s;
  s.value.resize(img.channels());
  s.d_du.resize(img.channels());
  s.d_dv.resize(img.channels());
  s.valid = bilinear_sample(img, p, s.value, s.d_du, s.d_dv);
  return s;
}

namespace {

void check_warp_inputs(const Image& src, const Image& depth, const Intrinsics& K) {
  if (src.empty()) throw std::invalid_argument("inverse_warp: empty source image");
  if (depth.channels() != 1 || depth.height() != src.height() || depth.width() != src.width())
    throw std::invalid_argument("inverse_warp: depth map does not match the source image");
  if (K.width != src.width() || K.height != src.height())
    throw std::invalid_argument("inverse_warp: intrinsics do not match the source image");
}

}  // namespace

WarpResult inverse_warp(const Image& src, const Image& depth, const RigidTransform& pose,
                        const Intrinsics& K) {
  check_warp_inputs(src, depth, K);
  const int height = src.height(), width = src.width(), channels = src.channels();

  WarpResult out;
  out.warped = Image(height, width, channels);
  out.d_du = Image(height, width, channels);
  out.d_dv = Image(height, width, channels);
  out.valid.assign(src.pixel_count(), 0);
  out.source_points.assign(src.pixel_count(), Eigen::Vector3d::Zero());
  out.intrinsics = K;
  out.pose = pose;

  bool bad_depth = false;
  std::vector<std::size_t> row_valid(height, 0);
#pragma omp parallel for schedule(static) reduction(|| : bad_depth)
  for (int i = 0; i < height; ++i) {
    for (int j = 0; j < width; ++j) {
      const double d = depth.at(i, j);
      if (!(d > 0.0) || !std::isfinite(d)) {
        bad_depth = true;
        continue;
      }
      const std::size_t px = static_cast<std::size_t>(i) * width + j;
      const Projection proj = project({static_cast<double>(j), static_cast<double>(i)}, d, K, pose);
      out.source_points[px] = proj.source_point;
      if (!proj.valid) continue;
      const std::size_t base = out.warped.index(i, j);
      const bool ok = bilinear_sample(src, proj.pixel, out.warped.data().subspan(base, channels),
                                      out.d_du.data().subspan(base, channels),
                                      out.d_dv.data().subspan(base, channels));
      if (ok) {
        out.valid[px] = 1;
        ++row_valid[i];
      }
    }
  }
  if (bad_depth) throw std::invalid_argument("inverse_warp: depth must be positive and finite");
  for (std::size_t n : row_valid) out.valid_count += n;
  return out;
}

WarpPoseGradient backprop_warp(const WarpResult& warp, const Image& depth, const Image& d_warped,
                               Image& d_depth) {
  if (!d_warped.same_shape(warp.warped))
    throw std::invalid_argument("backprop_warp: gradient shape does not match the warp");
  if (depth.height() != warp.warped.height() || depth.width() != warp.warped.width() ||
      !depth.same_shape(d_depth))
    throw std::invalid_argument("backprop_warp: depth shape does not match the warp");

  const Intrinsics& K = warp.intrinsics;
  const Eigen::Matrix3d& rotation = warp.pose.rotation();
  const int height = depth.height(), width = depth.width(), channels = warp.warped.channels();

  // One 3x3 + 3 partial per row, summed in row order afterwards.
  std::vector<WarpPoseGradient> row_partials(height);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < height; ++i) {
    WarpPoseGradient acc;
    for (int j = 0; j < width; ++j) {
      const std::size_t px = static_cast<std::size_t>(i) * width + j;
      if (!warp.valid[px]) continue;
      double g_u = 0.0, g_v = 0.0;
      for (int c = 0; c < channels; ++c) {
        const double g = d_warped.at(i, j, c);
        g_u += g * warp.d_du.at(i, j, c);
        g_v += g * warp.d_dv.at(i, j, c);
      }
      const Eigen::Vector3d& xs = warp.source_points[px];
      const double inv_z = 1.0 / xs.z();
      // dL/dX_s through u = fx X/Z + cx, v = fy Y/Z + cy.
      const Eigen::Vector3d d_point(g_u * K.fx * inv_z, g_v * K.fy * inv_z,
                                    -(g_u * K.fx * xs.x() + g_v * K.fy * xs.y()) * inv_z * inv_z);
      const Eigen::Vector3d ray((j - K.cx) / K.fx, (i - K.cy) / K.fy, 1.0);
      const double d = depth.at(i, j);
      d_depth.at(i, j) += d_point.dot(rotation * ray);
      acc.d_rotation += d_point * (d * ray).transpose();
      acc.d_translation += d_point;
    }
    row_partials[i] = acc;
  }

  WarpPoseGradient total;
  for (const auto& p : row_partials) {
    total.d_rotation += p.d_rotation;
    total.d_translation += p.d_translation;
  }
  return total;
}

std::array<double, 6> pose_gradient(const PoseParams& pose, const WarpPoseGradient& g) {
  const auto dr = rotation_derivatives(pose);
  return {dr[0].cwiseProduct(g.d_rotation).sum(),
          dr[1].cwiseProduct(g.d_rotation).sum(),
          dr[2].cwiseProduct(g.d_rotation).sum(),
          g.d_translation.x(),
          g.d_translation.y(),
          g.d_translation.z()};
}

}  // namespace viewsyn
