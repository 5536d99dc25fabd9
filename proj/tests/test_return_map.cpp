#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "retmap/return_map.hpp"
#include "retmap/sampling.hpp"

using namespace retmap;

namespace {

RadialDomain zonal(double d0 = 0.5, double eps = 0.01) {
  return RadialDomain(ThicknessField::zonal_legendre(ConvexCore::sphere(1.0), d0, eps));
}

}  // namespace

TEST(ReturnMap, ConcentricShellReciprocal) {
  const auto sphere = ConvexCore::sphere(1.0);
  const RadialDomain dom(ThicknessField::constant(sphere, 0.5));
  const auto c = sphere.point_at(1.0, 2.0);
  const auto hit = reciprocal_map(dom, radial_map(dom, c));
  EXPECT_TRUE(hit.point.ambient.isApprox(c.ambient, 1e-14));
  EXPECT_NEAR(hit.t, 0.5, 1e-14);
}

TEST(ReturnMap, CircleReciprocalOfScaledPoint) {
  const auto circle = ConvexCore::circle(1.0);
  const RadialDomain dom(ThicknessField::constant(circle, 0.3));
  const double t = 2.2;
  OuterBoundaryPoint x;
  x.ambient = 1.3 * AmbientVector(std::cos(t), std::sin(t), 0);
  x.inward_normal = -x.ambient.normalized();
  const auto hit = reciprocal_map(dom, x);
  EXPECT_TRUE(hit.point.ambient.isApprox(AmbientVector(std::cos(t), std::sin(t), 0), 1e-14));
}

TEST(ReturnMap, OutwardRayMissesCore) {
  const auto sphere = ConvexCore::sphere(1.0);
  const RadialDomain dom(ThicknessField::constant(sphere, 0.5));
  OuterBoundaryPoint x;
  x.ambient = AmbientVector(1.5, 0, 0);
  x.inward_normal = AmbientVector(1, 0, 0);
  try {
    reciprocal_map(dom, x);
    FAIL() << "expected NormalRayMissesCore";
  } catch (const GeometryError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NormalRayMissesCore);
  }
}

TEST(ReturnMap, ConstantFieldIsIdentity) {
  const auto ell = ConvexCore::ellipsoid(2, 1, 1);
  const RadialDomain dom(ThicknessField::constant(ell, 0.4));
  Rng rng(3);
  for (const auto& c : random_surface_points(ell, 50, rng)) {
    EXPECT_LT((return_map(dom, c).ambient - c.ambient).norm(), 1e-12);
  }
}

TEST(ReturnMap, CriticalPointsAreFixed) {
  const auto dom = zonal();
  const auto& core = dom.core();
  for (const auto& c : {core.point_at(0.0), core.point_at(std::numbers::pi),
                        core.point_at(std::numbers::pi / 2, 0.0), core.point_at(std::numbers::pi / 2, 2.3)}) {
    EXPECT_LT((return_map(dom, c).ambient - c.ambient).norm(), 1e-10);
  }
}

TEST(ReturnMap, SphereStepMatchesPlanarOracle) {
  const auto dom = zonal();
  for (double phi : {0.0, 1.0, 4.0}) {
    const auto c = dom.core().point_at(std::numbers::pi / 4, phi);
    const auto fc = return_map(dom, c);
    EXPECT_NEAR(fc.chart.theta - c.chart.theta, oracle::frozen::kSphereStepAtQuarterPi, 1e-13);
    EXPECT_NEAR(std::remainder(fc.chart.phi - phi, 2 * std::numbers::pi), 0.0, 1e-13);
  }
  for (double theta : {0.2, 1.0, 2.0, 2.9}) {
    const auto fc = return_map(dom, dom.core().point_at(theta, 0.5));
    EXPECT_NEAR(fc.chart.theta, oracle::sphere_p2_return_colatitude(theta, 0.5, 0.01), 1e-13);
  }
}

TEST(ReturnMap, CircleStepMatchesPlanarOracle) {
  const auto circle = ConvexCore::circle(1.0);
  const RadialDomain dom(ThicknessField::fourier_2d(circle, 0.5, {{2, 0.01}}));
  for (double t : {0.1, 1.0, 2.0, 4.0, 6.0}) {
    const auto fc = return_map(dom, circle.point_at(t));
    EXPECT_NEAR(std::remainder(fc.chart.theta - oracle::circle_fourier_return_angle(t, 1.0, 0.5, 0.01, 2),
                               2 * std::numbers::pi),
                0.0, 1e-13);
  }
}

TEST(ReturnMap, DisplacementIsOfOrderEps) {
  const auto sphere = ConvexCore::sphere(1.0);
  const auto grid = surface_grid(sphere, 200);
  const auto max_step = [&](double eps) {
    const auto dom = zonal(0.5, eps);
    double m = 0.0;
    for (const auto& c : grid) m = std::max(m, (return_map(dom, c).ambient - c.ambient).norm());
    return m;
  };
  const double k1 = max_step(1e-2) / 1e-2;
  const double k2 = max_step(1e-3) / 1e-3;
  EXPECT_LT(k1, 1.0);
  EXPECT_NEAR(k1 / k2, 1.0, 0.05);
}

TEST(ReturnMap, ConstantOrbitConvergesAtStepZero) {
  const auto sphere = ConvexCore::sphere(1.0);
  const RadialDomain dom(ThicknessField::constant(sphere, 0.5));
  const auto orbit = iterate_orbit(dom, sphere.point_at(1.0, 1.0));
  EXPECT_EQ(orbit.terminated, Termination::Converged);
  EXPECT_LE(orbit.steps(), 1u);
}

TEST(ReturnMap, OrbitFromQuarterPiReachesPole) {
  // The exact ray map climbs d, so the orbit ends at the maximum.
  const auto dom = zonal();
  const auto orbit = iterate_orbit(dom, dom.core().point_at(std::numbers::pi / 4, 0.0));
  ASSERT_EQ(orbit.terminated, Termination::Converged);
  EXPECT_LT(orbit.last().chart.theta, 1e-3);
  EXPECT_LT(orbit.limit_grad_norm, 1e-6);
  EXPECT_EQ(orbit.points.size(), orbit.steps() + 1);
  for (std::size_t k = 1; k < orbit.thickness_values.size(); ++k) {
    EXPECT_GE(orbit.thickness_values[k], orbit.thickness_values[k - 1] - 1e-15);
  }
}

TEST(ReturnMap, PoleSeedIsFixed) {
  const auto dom = zonal();
  const auto orbit = iterate_orbit(dom, dom.core().point_at(0.0));
  EXPECT_EQ(orbit.terminated, Termination::Converged);
  EXPECT_LE(orbit.steps(), 1u);
}

TEST(ReturnMap, OrbitReportsMaxIterations) {
  const auto dom = zonal();
  const auto orbit = iterate_orbit(dom, dom.core().point_at(1.0), 5, 1e-14);
  EXPECT_EQ(orbit.terminated, Termination::MaxIterations);
  EXPECT_EQ(orbit.steps(), 5u);
}

TEST(ReturnMap, OrbitCapturesGeometryErrors) {
  const auto sphere = ConvexCore::sphere(1.0);
  const RadialDomain dom(ThicknessField::zonal_legendre(sphere, 0.1, 0.5));
  const auto orbit = iterate_orbit(dom, sphere.point_at(std::numbers::pi / 2));
  EXPECT_EQ(orbit.terminated, Termination::Error);
  ASSERT_TRUE(orbit.error.has_value());
  EXPECT_EQ(*orbit.error, ErrorKind::InadmissibleThickness);
}

TEST(ReturnMap, CompactOrbitsMatchFullOrbits) {
  const auto dom = zonal(0.5, 0.05);
  const auto seeds = surface_grid(dom.core(), 12);
  const auto compact = iterate_orbits(dom, seeds, 2000, 1e-10, 3, false);
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto full = iterate_orbit(dom, seeds[i], 2000, 1e-10);
    EXPECT_EQ(compact[i].steps(), full.steps());
    EXPECT_EQ(compact[i].last().ambient, full.last().ambient);
    EXPECT_EQ(compact[i].points.size(), 2u);
  }
}

TEST(ReturnMap, AuditMeasuresAscent) {
  const auto dom = zonal();
  Rng rng(2);
  const auto pts = random_surface_points(dom.core(), 200, rng);
  const auto audit = descent_audit(dom, pts);
  EXPECT_EQ(audit.samples, 200u);
  EXPECT_EQ(audit.errors, 0u);
  EXPECT_GT(audit.violations, 190u);
  EXPECT_GT(audit.max_increase, 0.0);

  const RadialDomain flat(ThicknessField::constant(dom.core(), 0.5));
  EXPECT_EQ(descent_audit(flat, pts).violations, 0u);
}

TEST(ReturnMap, OrbitCsv) {
  const auto dom = zonal();
  const auto orbit = iterate_orbit(dom, dom.core().point_at(1.0), 3, 1e-14);
  std::ostringstream os;
  write_csv(os, orbit);
  const auto text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "step,theta,phi,x,y,z,d,displacement");
  EXPECT_NE(text.rfind(",nan\n"), std::string::npos);
}
