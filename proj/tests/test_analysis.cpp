#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "retmap/analysis.hpp"

using namespace retmap;

namespace {

constexpr double kEps = 0.01;
constexpr double kAEq = 2 * 0.495 / 1.495;
constexpr double kAPole = 2 * 0.51 / 1.51;

RadialDomain zonal(double eps = kEps) {
  return RadialDomain(ThicknessField::zonal_legendre(ConvexCore::sphere(1.0), 0.5, eps));
}

SurfacePoint equator(const RadialDomain& dom) { return dom.core().point_at(std::numbers::pi / 2, 0.0); }
SurfacePoint pole(const RadialDomain& dom) { return dom.core().point_at(0.0); }

std::vector<double> real_parts(const LinearizationReport& r) {
  std::vector<double> out;
  for (const auto& z : r.eigenvalues_DF) out.push_back(z.real());
  return out;
}

}  // namespace

TEST(Analysis, GainOnUnitSphere) {
  const auto sphere = ConvexCore::sphere(1.0);
  const auto c = sphere.point_at(0.4, 0.2);
  const auto a = operator_A(sphere, c, sphere.frame_at(c), 0.5);
  EXPECT_TRUE(a.isApprox((2.0 / 3.0) * Eigen::Matrix2d::Identity(), 1e-14));
}

TEST(Analysis, GainAtZonalEquator) {
  const auto dom = zonal();
  const auto c = equator(dom);
  const auto a = operator_A(dom, c, dom.core().frame_at(c));
  EXPECT_NEAR(kAEq, 0.6622073578595318, 1e-15);
  EXPECT_TRUE(a.isApprox(kAEq * Eigen::Matrix2d::Identity(), 1e-14));
}

TEST(Analysis, GainOnEllipsoidPrincipalFrame) {
  const auto ell = ConvexCore::ellipsoid(2, 1, 1);
  const auto c = ell.point_from_ambient(AmbientVector(0, 1, 0));
  const auto frame = ell.frame_at(c);
  const double d = 0.3;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(Eigen::Matrix2d(operator_A(ell, c, frame, d)));
  const auto k = principal_curvatures(ell, c);
  std::vector<double> expected{2 * d / (1 - d * k[0]), 2 * d / (1 - d * k[1])};
  std::sort(expected.begin(), expected.end());
  EXPECT_NEAR(eig.eigenvalues()[0], expected[0], 1e-14);
  EXPECT_NEAR(eig.eigenvalues()[1], expected[1], 1e-14);
}

TEST(Analysis, RayTiltGainIsMinusHalfNominal) {
  const auto ell = ConvexCore::ellipsoid(2, 1, 1);
  const auto c = ell.point_at(1.0, 0.4);
  const auto frame = ell.frame_at(c);
  EXPECT_TRUE(operator_A(ell, c, frame, 0.2, GainModel::RayTilt)
                  .isApprox(-0.5 * operator_A(ell, c, frame, 0.2, GainModel::Nominal), 1e-14));
}

TEST(Analysis, SingularGainThrows) {
  // I - dS vanishes only for d = 1/kappa < 0 on a convex core.
  const auto sphere = ConvexCore::sphere(1.0);
  const auto c = sphere.point_at(1.0);
  try {
    operator_A(sphere, c, sphere.frame_at(c), -1.0);
    FAIL() << "expected CurvatureSingularity";
  } catch (const GeometryError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CurvatureSingularity);
  }
}

TEST(Analysis, GainSeriesRemainderIsCubic) {
  const auto ell = ConvexCore::ellipsoid(2, 1, 1);
  const auto c = ell.point_at(1.1, 0.7);
  std::vector<double> ds{1e-1, 3e-2, 1e-2, 3e-3};
  std::vector<double> r;
  for (double d : ds) r.push_back(operator_A_series_residual(ell, c, d));
  EXPECT_NEAR(oracle::loglog_slope(ds, r), 3.0, 0.15);
}

TEST(Analysis, ResidualsVanishForConstantFieldAndAtCriticalPoints) {
  const auto sphere = ConvexCore::sphere(1.0);
  const RadialDomain flat(ThicknessField::constant(sphere, 0.5));
  EXPECT_LT(first_order_residual(flat, sphere.point_at(1.0, 1.0)), 1e-12);
  const auto dom = zonal();
  EXPECT_LT(first_order_residual(dom, equator(dom)), 1e-10);
  EXPECT_LT(first_order_residual(dom, pole(dom)), 1e-10);
  const auto so = second_order_residual(flat, sphere.point_at(1.0, 1.0));
  EXPECT_LT(so.total, 1e-12);
  EXPECT_LT(so.transverse, 1e-12);
}

TEST(Analysis, RayTiltExpansionFitsExactMap) {
  const auto sphere = ConvexCore::sphere(1.0);
  const DomainFamily family = [&](double eps) {
    return RadialDomain(ThicknessField::zonal_legendre(sphere, 0.5, eps));
  };
  const std::vector<double> eps{1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
  const auto c = sphere.point_at(std::numbers::pi / 4, 0.3);
  const auto tilt = expansion_sweep(family, c, eps, GainModel::RayTilt);
  EXPECT_GT(tilt.fitted_slope, 1.85);
  EXPECT_NEAR(tilt.normal_slope, 2.0, 0.15);
  EXPECT_TRUE(tilt.transverse_vanishing);

  // the stated gain has the wrong sign and factor, so its remainder is first order
  const auto nominal = expansion_sweep(family, c, eps, GainModel::Nominal);
  EXPECT_NEAR(nominal.fitted_slope, 1.0, 0.1);
}

TEST(Analysis, EllipsoidTransverseResidualIsMeasured) {
  const auto ell = ConvexCore::ellipsoid(2, 1, 1);
  const AmbientVector axis = AmbientVector(1, 1, 1).normalized();
  const DomainFamily family = [&](double eps) {
    return RadialDomain(ThicknessField::zonal_legendre(ell, 0.5, eps, axis));
  };
  const auto report = expansion_sweep(family, ell.point_at(1.1, 0.7), {1e-1, 3e-2, 1e-2, 3e-3, 1e-3});
  EXPECT_FALSE(report.transverse_vanishing);
  EXPECT_NEAR(report.transverse_slope, 1.05, 0.1);
  EXPECT_NEAR(report.normal_slope, 2.0, 0.15);
}

TEST(Analysis, LoglogSlope) {
  const auto fit = loglog_slope({1, 10, 100}, {2, 200, 20000});
  EXPECT_NEAR(fit.slope, 2.0, 1e-12);
  EXPECT_FALSE(fit.vanishing);
  const auto zero = loglog_slope({1, 10}, {0.0, 1e-15});
  EXPECT_TRUE(zero.vanishing);
  EXPECT_TRUE(std::isinf(zero.slope));
}

TEST(Analysis, ConstantFieldJacobianIsIdentity) {
  const auto sphere = ConvexCore::sphere(1.0);
  const RadialDomain flat(ThicknessField::constant(sphere, 0.5));
  const auto c = sphere.point_at(1.3, 0.2);
  const auto report = linearize_fd(flat, c, sphere.frame_at(c));
  EXPECT_TRUE(report.DF.isApprox(Eigen::Matrix2d::Identity(), 1e-8));
  EXPECT_EQ(report.classification.stability, Stability::Neutral);
  EXPECT_FALSE(report.classification.morse_index.has_value());
}

TEST(Analysis, FdJacobianAtEquatorMatchesOracle) {
  const auto dom = zonal();
  const auto c = equator(dom);
  const auto report = linearize_fd(dom, c, dom.core().frame_at(c));
  const auto ev = real_parts(report);
  EXPECT_NEAR(ev[0], 1.0, 1e-7);
  EXPECT_NEAR(ev[1], oracle::frozen::kSphereEquatorSlope, 1e-7);
  EXPECT_NEAR(report.DF(0, 0), oracle::frozen::kSphereEquatorSlope, 1e-7);
}

TEST(Analysis, FdJacobianAtPoleMatchesOracle) {
  const auto dom = zonal();
  const auto c = pole(dom);
  const auto report = linearize_fd(dom, c, dom.core().frame_at(c));
  for (double ev : real_parts(report)) EXPECT_NEAR(ev, oracle::frozen::kSpherePoleSlope, 1e-7);
  EXPECT_EQ(report.classification.stability, Stability::Attracting);
}

TEST(Analysis, FdJacobianRejectsNonFixedPoint) {
  const auto dom = zonal();
  const auto c = dom.core().point_at(1.0);
  try {
    linearize_fd(dom, c, dom.core().frame_at(c));
    FAIL() << "expected NotAFixedPoint";
  } catch (const GeometryError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotAFixedPoint);
  }
}

TEST(Analysis, AnalyticLinearizationWithStatedGain) {
  const auto dom = zonal();
  const auto eq = equator(dom);
  const auto r_eq = linearize_analytic(dom, eq, dom.core().frame_at(eq));
  Eigen::Matrix2d expected = Eigen::Matrix2d::Identity();
  expected(0, 0) -= 3 * kAEq * kEps;
  EXPECT_TRUE(r_eq.DF.isApprox(expected, 1e-13));
  EXPECT_NEAR(real_parts(r_eq)[0], 0.9801337792642141, 1e-13);
  EXPECT_EQ(r_eq.classification.labels[0], DirectionLabel::Contracting);
  EXPECT_EQ(r_eq.classification.labels[1], DirectionLabel::Neutral);
  ASSERT_TRUE(r_eq.classification.morse_index.has_value());
  EXPECT_EQ(*r_eq.classification.morse_index, 0);
  EXPECT_TRUE(r_eq.classification.neutral_excluded);

  const auto p = pole(dom);
  const auto r_pole = linearize_analytic(dom, p, dom.core().frame_at(p));
  EXPECT_TRUE(r_pole.DF.isApprox((1 + 3 * kAPole * kEps) * Eigen::Matrix2d::Identity(), 1e-13));
  EXPECT_EQ(r_pole.classification.stability, Stability::Repelling);
  EXPECT_EQ(*r_pole.classification.morse_index, 2);
}

TEST(Analysis, RayTiltLinearizationAgreesWithFd) {
  const auto dom = zonal();
  for (const auto& c : {equator(dom), pole(dom), dom.core().point_at(std::numbers::pi, 0.0)}) {
    const auto frame = dom.core().frame_at(c);
    const auto fd = linearize_fd(dom, c, frame);
    const auto tilt = linearize_analytic(dom, c, frame, GainModel::RayTilt);
    EXPECT_LT((fd.DF - tilt.DF).norm(), 1e-7);
  }
}

TEST(Analysis, CircleJacobianMatchesOracle) {
  const auto circle = ConvexCore::circle(1.0);
  const RadialDomain dom(ThicknessField::fourier_2d(circle, 0.5, {{2, 0.01}}));
  const auto r0 = linearize_fd(dom, circle.point_at(0.0), circle.frame_at(circle.point_at(0.0)));
  EXPECT_NEAR(r0.DF(0, 0), oracle::frozen::kCircleSlopeAtZero, 1e-8);
  const auto c = circle.point_at(std::numbers::pi / 2);
  EXPECT_NEAR(linearize_fd(dom, c, circle.frame_at(c)).DF(0, 0), oracle::frozen::kCircleSlopeAtHalfPi, 1e-8);
}

TEST(Analysis, ClassificationOfSyntheticReports) {
  const auto sphere = ConvexCore::sphere(1.0);
  const auto c = sphere.point_at(1.0);
  const auto frame = sphere.frame_at(c);
  const auto saddle = make_linearization_report(c, frame, Eigen::Vector2d(0.9, 1.1).asDiagonal().toDenseMatrix(),
                                                std::nullopt, std::nullopt);
  EXPECT_EQ(saddle.classification.stability, Stability::Saddle);
  EXPECT_FALSE(saddle.classification.morse_index.has_value());
  const auto neutral = make_linearization_report(c, frame, Eigen::Matrix2d::Identity(), std::nullopt, std::nullopt);
  EXPECT_EQ(neutral.classification.stability, Stability::Neutral);
}

TEST(Analysis, EigenvalueCsv) {
  const auto dom = zonal();
  const auto c = equator(dom);
  std::ostringstream os;
  write_eigenvalues_csv(os, linearize_analytic(dom, c, dom.core().frame_at(c)));
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "index,re,im,label");
}
