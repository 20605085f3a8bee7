#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "oracles.hpp"
#include "viewsyn/geometry.hpp"

using namespace viewsyn;

namespace {

// Elemental rotations typed in by hand, independent of geometry.cpp.
Eigen::Matrix3d hand_rz_ry_rx(double rx, double ry, double rz) {
  Eigen::Matrix3d X, Y, Z;
  X << 1, 0, 0, 0, std::cos(rx), -std::sin(rx), 0, std::sin(rx), std::cos(rx);
  Y << std::cos(ry), 0, std::sin(ry), 0, 1, 0, -std::sin(ry), 0, std::cos(ry);
  Z << std::cos(rz), -std::sin(rz), 0, std::sin(rz), std::cos(rz), 0, 0, 0, 1;
  return Z * Y * X;
}

Intrinsics camera() {
  Intrinsics K;
  K.fx = 50.0;
  K.fy = 45.0;
  K.cx = 15.5;
  K.cy = 11.5;
  K.width = 32;
  K.height = 24;
  return K;
}

}  // namespace

TEST(Pose, ZeroIsIdentity) {
  const RigidTransform T = pose_to_transform({});
  EXPECT_EQ(T.matrix(), Eigen::Matrix4d::Identity());
}

TEST(Pose, MatchesElementalMatrices) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> a(-1.2, 1.2);
  for (int n = 0; n < 50; ++n) {
    const PoseParams p{a(rng), a(rng), a(rng), a(rng), a(rng), a(rng)};
    const RigidTransform T = pose_to_transform(p);
    EXPECT_LT((T.rotation() - hand_rz_ry_rx(p.rx, p.ry, p.rz)).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(T.translation(), Eigen::Vector3d(p.tx, p.ty, p.tz));
  }
}

TEST(Pose, QuarterTurnsMoveAxes) {
  // Rz(pi/2) takes x to y; Rx(pi/2) takes y to z.
  const Eigen::Vector3d y = pose_to_transform({0, 0, M_PI / 2, 0, 0, 0}).apply(Eigen::Vector3d::UnitX());
  EXPECT_NEAR((y - Eigen::Vector3d::UnitY()).norm(), 0.0, 1e-15);
  const Eigen::Vector3d z = pose_to_transform({M_PI / 2, 0, 0, 0, 0, 0}).apply(Eigen::Vector3d::UnitY());
  EXPECT_NEAR((z - Eigen::Vector3d::UnitZ()).norm(), 0.0, 1e-15);
}

TEST(Pose, RotationIsOrthonormal) {
  const Eigen::Matrix3d R = pose_to_transform({0.3, -0.7, 1.1, 0, 0, 0}).rotation();
  EXPECT_LT((R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(R.determinant(), 1.0, 1e-15);
}

TEST(Pose, RoundTripThroughMatrix) {
  const PoseParams p{0.2, -0.4, 0.9, 1.0, -2.0, 3.0};
  const PoseParams q = transform_to_pose(pose_to_transform(p));
  const auto a = p.as_array(), b = q.as_array();
  for (int k = 0; k < 6; ++k) EXPECT_NEAR(a[k], b[k], 1e-14);
}

TEST(Pose, NonFiniteThrows) {
  EXPECT_THROW(pose_to_transform({NAN, 0, 0, 0, 0, 0}), std::invalid_argument);
  EXPECT_THROW(pose_to_transform({0, 0, 0, 0, INFINITY, 0}), std::invalid_argument);
}

TEST(Pose, RotationDerivativesMatchFiniteDifferences) {
  const PoseParams p{0.3, -0.2, 0.5, 0, 0, 0};
  const auto d = rotation_derivatives(p);
  for (int axis = 0; axis < 3; ++axis)
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        auto entry = [&](const std::vector<double>& x) {
          return pose_to_transform(PoseParams{x[0], x[1], x[2], 0, 0, 0}).rotation()(r, c);
        };
        const double fd = oracle::central_difference(entry, {p.rx, p.ry, p.rz}, axis, 1e-6);
        EXPECT_NEAR(d[axis](r, c), fd, 1e-9) << "axis " << axis << " entry " << r << c;
      }
}

TEST(RigidTransform, InverseComposesToIdentity) {
  const RigidTransform T = pose_to_transform({0.1, 0.2, -0.3, 1.0, 2.0, -0.5});
  const Eigen::Matrix4d I = (invert(T) * T).matrix();
  EXPECT_LT((I - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(RigidTransform, FromMatrixRejectsNonRotation) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m(0, 0) = 1.01;
  EXPECT_THROW(RigidTransform::from_matrix(m), std::invalid_argument);
  m = Eigen::Matrix4d::Identity();
  m(0, 0) = -1.0;  // reflection
  EXPECT_THROW(RigidTransform::from_matrix(m), std::invalid_argument);
  m = Eigen::Matrix4d::Identity();
  m(3, 0) = 0.5;
  EXPECT_THROW(RigidTransform::from_matrix(m), std::invalid_argument);
  EXPECT_NO_THROW(RigidTransform::from_matrix(pose_to_transform({0.1, 0.2, 0.3, 1, 2, 3}).matrix()));
}

TEST(Project, IdentityIsExact) {
  const Intrinsics K = camera();
  for (double u : {0.0, 3.25, 31.0})
    for (double v : {0.0, 7.75, 23.0}) {
      const Projection p = project({u, v}, 2.7, K, RigidTransform::identity());
      ASSERT_TRUE(p.valid);
      EXPECT_EQ(p.pixel.u, u);
      EXPECT_EQ(p.pixel.v, v);
      EXPECT_EQ(p.source_depth, 2.7);
    }
}

TEST(Project, MatchesPinholeFormula) {
  const Intrinsics K = camera();
  const RigidTransform T = pose_to_transform({0.05, -0.03, 0.02, 0.1, -0.2, 0.3});
  const double u = 5.5, v = 17.25, d = 3.0;
  const Eigen::Vector3d X(d * (u - K.cx) / K.fx, d * (v - K.cy) / K.fy, d);
  const Eigen::Vector3d Y = T.rotation() * X + T.translation();
  const Projection p = project({u, v}, d, K, T);
  ASSERT_TRUE(p.valid);
  EXPECT_NEAR(p.pixel.u, K.fx * Y.x() / Y.z() + K.cx, 1e-12);
  EXPECT_NEAR(p.pixel.v, K.fy * Y.y() / Y.z() + K.cy, 1e-12);
  EXPECT_NEAR(p.source_depth, Y.z(), 1e-14);
}

TEST(Project, PureTranslationShift) {
  const Intrinsics K = camera();
  const Projection p = project({10.0, 10.0}, 4.0, K, pose_to_transform({0, 0, 0, 0.2, 0, 0}));
  EXPECT_NEAR(p.pixel.u, 10.0 + K.fx * 0.2 / 4.0, 1e-12);
  EXPECT_EQ(p.pixel.v, 10.0);
}

TEST(Project, BehindCameraIsInvalid) {
  const Intrinsics K = camera();
  EXPECT_FALSE(project({10, 10}, 1.0, K, pose_to_transform({0, 0, 0, 0, 0, -1.0})).valid);
  EXPECT_FALSE(project({10, 10}, 1.0, K, pose_to_transform({0, 0, 0, 0, 0, -2.0})).valid);
  EXPECT_TRUE(project({10, 10}, 1.0, K, pose_to_transform({0, 0, 0, 0, 0, -0.9})).valid);
}

TEST(Intrinsics, ScalePreservesPixelCentres) {
  const Intrinsics K = camera();
  const Intrinsics K1 = scale_intrinsics(K, 1);
  EXPECT_EQ(K1.fx, 25.0);
  EXPECT_EQ(K1.fy, 22.5);
  EXPECT_EQ(K1.cx, (15.5 + 0.5) / 2 - 0.5);
  EXPECT_EQ(K1.cy, (11.5 + 0.5) / 2 - 0.5);
  EXPECT_EQ(K1.width, 16);
  EXPECT_EQ(K1.height, 12);
  // A fine pixel centre (2j + 0.5) maps to the same ray as coarse pixel j.
  const Intrinsics K2 = scale_intrinsics(K, 2);
  for (int j = 0; j < K2.width; ++j) {
    const double fine = 4.0 * j + 1.5;
    EXPECT_NEAR((j - K2.cx) / K2.fx, (fine - K.cx) / K.fx, 1e-15);
  }
  EXPECT_EQ(scale_intrinsics(K, 0).cx, K.cx);
}

TEST(Intrinsics, ScaleRejectsBadLevels) {
  EXPECT_THROW(scale_intrinsics(camera(), -1), std::invalid_argument);
  EXPECT_THROW(scale_intrinsics(camera(), 4), std::invalid_argument);  // 2 x 1
  EXPECT_NO_THROW(scale_intrinsics(camera(), 3));
}

TEST(Intrinsics, Validate) {
  Intrinsics K = camera();
  EXPECT_NO_THROW(K.validate());
  K.fx = 0;
  EXPECT_THROW(K.validate(), std::invalid_argument);
  K = camera();
  K.cx = 40;
  EXPECT_THROW(K.validate(), std::invalid_argument);
}
