#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Geometry>

#include "oracles.hpp"
#include "retmap/error.hpp"
#include "retmap/sampling.hpp"
#include "retmap/surface_core.hpp"

using namespace retmap;

namespace {

// Normal of the quadric straight from its gradient, independent of the library.
Eigen::Vector3d quadric_normal(const Eigen::Vector3d& axes, const Eigen::Vector3d& x) {
  Eigen::Vector3d g(x.x() / (axes.x() * axes.x()), x.y() / (axes.y() * axes.y()), x.z() / (axes.z() * axes.z()));
  return g.normalized();
}

}  // namespace

TEST(SurfaceCore, NormalOnAxisPoints) {
  const auto sphere = ConvexCore::sphere(1.0);
  EXPECT_TRUE(normal_at(sphere, sphere.point_at(0.0)).isApprox(AmbientVector(0, 0, 1), 1e-14));

  const auto circle = ConvexCore::circle(1.0);
  EXPECT_TRUE(normal_at(circle, circle.point_at(0.0)).isApprox(AmbientVector(1, 0, 0), 1e-14));

  const auto ell = ConvexCore::ellipsoid(2, 1, 1);
  const auto p = ell.point_from_ambient(AmbientVector(2, 0, 0));
  EXPECT_TRUE(normal_at(ell, p).isApprox(AmbientVector(1, 0, 0), 1e-14));
}

TEST(SurfaceCore, NormalRejectsOffSurfacePoint) {
  const auto sphere = ConvexCore::sphere(1.0);
  SurfacePoint bad;
  bad.ambient = AmbientVector(0, 0, 1.1);
  try {
    normal_at(sphere, bad);
    FAIL() << "expected OffSurface";
  } catch (const GeometryError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OffSurface);
  }
}

TEST(SurfaceCore, SphereShapeOperatorIsMinusIdentity) {
  const auto sphere = ConvexCore::sphere(1.0);
  Rng rng(11);
  for (const auto& p : random_surface_points(sphere, 20, rng)) {
    const auto s = shape_operator_at(sphere, p, sphere.frame_at(p));
    EXPECT_TRUE(s.isApprox(-TangentMatrix::Identity(2, 2), 1e-12));
  }
}

TEST(SurfaceCore, CircleShapeOperatorScalesWithRadius) {
  const auto circle = ConvexCore::circle(2.5);
  const auto p = circle.point_at(0.7);
  const auto s = shape_operator_at(circle, p, circle.frame_at(p));
  ASSERT_EQ(s.rows(), 1);
  EXPECT_NEAR(s(0, 0), -1.0 / 2.5, 1e-14);
}

TEST(SurfaceCore, EllipsoidShapeOperatorAtAxisPoint) {
  const auto ell = ConvexCore::ellipsoid(2, 1, 1);
  const auto p = ell.point_from_ambient(AmbientVector(2, 0, 0));
  const auto s = shape_operator_at(ell, p, ell.frame_at(p));
  EXPECT_TRUE(s.isApprox(-2.0 * TangentMatrix::Identity(2, 2), 1e-12));
}

TEST(SurfaceCore, EllipsoidShapeOperatorMatchesNormalDifferences) {
  const auto ell = ConvexCore::ellipsoid(2, 1, 1);
  const Eigen::Vector3d axes(2, 1, 1);
  const auto p = ell.point_at(1.1, 0.7);
  const auto frame = ell.frame_at(p);
  const auto s = shape_operator_at(ell, p, frame);
  // Richardson-extrapolated central differences of the quadric normal along
  // projected tangent steps.
  for (int j = 0; j < 2; ++j) {
    const Eigen::Vector3d v = frame.vectors.col(j);
    const auto diff = [&](double h) {
      const auto plus = ell.project(p.ambient + h * v).ambient;
      const auto minus = ell.project(p.ambient - h * v).ambient;
      return Eigen::Vector3d((quadric_normal(axes, plus) - quadric_normal(axes, minus)) / (2 * h));
    };
    const double h = 1e-3;
    const Eigen::Vector3d dnu = (4 * diff(h / 2) - diff(h)) / 3;
    for (int i = 0; i < 2; ++i) {
      EXPECT_NEAR(s(i, j), -frame.vectors.col(i).dot(dnu), 1e-8);
    }
  }
  EXPECT_NEAR(s(0, 1), s(1, 0), 1e-12);
}

TEST(SurfaceCore, PrincipalCurvaturesOfEllipsoidVertex) {
  const auto ell = ConvexCore::ellipsoid(2, 1, 1);
  // at (0,1,0) the radii of curvature are a^2/b = 4 and c^2/b = 1
  const auto k = principal_curvatures(ell, ell.point_from_ambient(AmbientVector(0, 1, 0)));
  EXPECT_NEAR(k[0], -1.0, 1e-12);
  EXPECT_NEAR(k[1], -0.25, 1e-12);
}

TEST(SurfaceCore, RayAxialHit) {
  const auto sphere = ConvexCore::sphere(1.0);
  const auto r = ray_first_hit(sphere, AmbientVector(2, 0, 0), AmbientVector(-1, 0, 0));
  ASSERT_EQ(r.outcome, RayOutcome::Hit);
  EXPECT_NEAR(r.t, 1.0, 1e-15);
  EXPECT_TRUE(r.point.ambient.isApprox(AmbientVector(1, 0, 0), 1e-15));
}

TEST(SurfaceCore, RayParallelMiss) {
  const auto sphere = ConvexCore::sphere(1.0);
  const auto r = ray_first_hit(sphere, AmbientVector(2, 0, 0), AmbientVector(0, 1, 0));
  EXPECT_EQ(r.outcome, RayOutcome::Miss);
  EXPECT_FALSE(r.hit());
}

TEST(SurfaceCore, RayPointingAwayMisses) {
  const auto sphere = ConvexCore::sphere(1.0);
  EXPECT_EQ(ray_first_hit(sphere, AmbientVector(2, 0, 0), AmbientVector(1, 0, 0)).outcome, RayOutcome::Miss);
}

TEST(SurfaceCore, RayEllipsoidAxialHit) {
  const auto ell = ConvexCore::ellipsoid(2, 1, 1);
  const auto r = ray_first_hit(ell, AmbientVector(0, 3, 0), AmbientVector(0, -1, 0));
  ASSERT_EQ(r.outcome, RayOutcome::Hit);
  EXPECT_NEAR(r.t, 2.0, 1e-15);
  EXPECT_TRUE(r.point.ambient.isApprox(AmbientVector(0, 1, 0), 1e-15));
}

TEST(SurfaceCore, RayTangentIsGrazing) {
  const auto sphere = ConvexCore::sphere(1.0);
  const auto r = ray_first_hit(sphere, AmbientVector(1, -1, 0), AmbientVector(0, 1, 0));
  EXPECT_EQ(r.outcome, RayOutcome::Grazing);
  EXPECT_NEAR(r.t, 1.0, 1e-7);
}

TEST(SurfaceCore, RayHitsAreOnSurfaceAndFirst) {
  const auto ell = ConvexCore::ellipsoid(2, 1.5, 1);
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const AmbientVector origin(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    if (ell.implicit(origin) <= 0.0) continue;
    const AmbientVector target(rng.uniform(-1, 1), rng.uniform(-0.7, 0.7), rng.uniform(-0.5, 0.5));
    const AmbientVector dir = (target - origin).normalized();
    const auto r = ray_first_hit(ell, origin, dir);
    if (ell.implicit(target) >= 0.0) continue;
    ASSERT_TRUE(r.hit());
    EXPECT_LT(std::abs(ell.implicit(r.point.ambient)), 1e-12);
    EXPECT_GT(ell.implicit(origin + 0.999 * r.t * dir), 0.0);
  }
}

TEST(SurfaceCore, RetractZeroStep) {
  const auto sphere = ConvexCore::sphere(1.0);
  const auto p = sphere.point_at(0.0);
  EXPECT_TRUE(retract(sphere, p, AmbientVector(1, 0, 0), 0.0).ambient.isApprox(AmbientVector(0, 0, 1), 1e-15));
}

TEST(SurfaceCore, RetractRadialProjection) {
  const auto sphere = ConvexCore::sphere(1.0);
  const auto q = retract(sphere, sphere.point_at(0.0), AmbientVector(1, 0, 0), 0.1);
  EXPECT_TRUE(q.ambient.isApprox(AmbientVector(0.1, 0, 1).normalized(), 1e-15));
}

TEST(SurfaceCore, EllipsoidRetractDeviationIsQuadratic) {
  const auto ell = ConvexCore::ellipsoid(2, 1, 1);
  const auto p = ell.point_at(1.1, 0.7);
  const AmbientVector v = ell.frame_at(p).vectors * Eigen::Vector2d(0.6, 0.8);
  std::vector<double> hs{1e-2, 1e-3, 1e-4, 1e-5};
  std::vector<double> dev;
  for (double h : hs) dev.push_back((retract(ell, p, v, h).ambient - (p.ambient + h * v)).norm());
  EXPECT_NEAR(oracle::loglog_slope(hs, dev), 2.0, 0.05);
}

TEST(SurfaceCore, ProjectionLandsOnSurface) {
  const auto ell = ConvexCore::ellipsoid(3, 1, 0.5);
  Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    const AmbientVector y(rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(-4, 4));
    EXPECT_LT(std::abs(ell.implicit(ell.project(y).ambient)), 1e-12);
  }
}

TEST(SurfaceCore, ChartRoundTrip) {
  const auto ell = ConvexCore::ellipsoid(2, 1, 1);
  const auto p = ell.point_at(1.1, 0.7);
  EXPECT_NEAR(p.chart.theta, 1.1, 1e-14);
  EXPECT_NEAR(p.chart.phi, 0.7, 1e-14);
  const auto pole = ConvexCore::sphere(1.0).point_at(0.0, 0.0);
  EXPECT_EQ(pole.chart.phi, 0.0);
}

TEST(SurfaceCore, FramesAreOrthonormalAndTangent) {
  const auto ell = ConvexCore::ellipsoid(2, 1, 1);
  for (double theta : {0.0, 1e-8, 0.5, std::numbers::pi / 2, std::numbers::pi}) {
    const auto p = ell.point_at(theta, 0.3);
    const auto f = ell.frame_at(p);
    const auto nu = normal_at(ell, p);
    EXPECT_TRUE((f.vectors.transpose() * f.vectors).isApprox(Eigen::Matrix2d::Identity(), 1e-12));
    EXPECT_LT((f.vectors.transpose() * nu).norm(), 1e-12);
    EXPECT_GT(AmbientVector(f.vectors.col(0)).cross(AmbientVector(f.vectors.col(1))).dot(nu), 0.0);
  }
}
