#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "retmap/surface_core.hpp"

namespace retmap {

enum class FieldKind { Constant, ZonalLegendre, ZonalSeries, Fourier2d, Scaled };

/// Value, gradient and Hessian of a smooth ambient extension of a field.
struct FieldJet {
  double value = 0.0;
  AmbientVector gradient = AmbientVector::Zero();
  Eigen::Matrix3d hessian = Eigen::Matrix3d::Zero();
};

struct FourierMode {
  int k = 0;
  double amplitude = 0.0;
};

/// Thickness d on the boundary of a core.
///
/// Every kind is defined through the parametric direction q = (x/a, y/b, z/c),
/// which is a unit vector on the core, so that the ambient extension is smooth
/// near the surface:
///   constant(d0)                 d = d0
///   zonal_legendre(d0, eps)      d = d0 + eps P2(<q, axis>)
///   zonal_series(d0, eps, c)     d = d0 + eps sum_l c_l P_l(<q, axis>)
///   fourier_2d(d0, modes)        d = d0 + sum_k A_k cos(k theta), N = 2 only
///   scaled(lambda, inner)        d = lambda * inner
class ThicknessField {
 public:
  static ThicknessField constant(const ConvexCore& core, double d0);
  static ThicknessField zonal_legendre(const ConvexCore& core, double d0, double eps,
                                       const AmbientVector& axis = AmbientVector::UnitZ());
  static ThicknessField zonal_series(const ConvexCore& core, double d0, double eps,
                                     std::vector<double> legendre_coefficients,
                                     const AmbientVector& axis = AmbientVector::UnitZ());
  static ThicknessField fourier_2d(const ConvexCore& core, double d0, std::vector<FourierMode> modes);
  static ThicknessField scaled(double lambda, const ThicknessField& inner);

  FieldKind kind() const { return kind_; }
  const ConvexCore& core() const { return core_; }
  std::string describe() const;

  /// Jet of the ambient extension at x (no positivity check).
  FieldJet jet(const AmbientVector& x) const;
  double raw_value(const AmbientVector& x) const { return jet(x).value; }

 private:
  ThicknessField(FieldKind kind, ConvexCore core);

  FieldKind kind_;
  ConvexCore core_;
  double d0_ = 0.0;
  double eps_ = 0.0;
  double lambda_ = 1.0;
  AmbientVector axis_ = AmbientVector::UnitZ();
  std::vector<double> coefficients_;
  std::vector<FourierMode> modes_;
  std::shared_ptr<const ThicknessField> inner_;
};

/// Legendre polynomial P_l(x) with first and second derivatives.
struct LegendreJet {
  double p = 0.0;
  double dp = 0.0;
  double d2p = 0.0;
};
LegendreJet legendre(int l, double x);

/// d(p). Throws InadmissibleThickness for d(p) <= 0 and OffSurface.
double eval(const ThicknessField& field, const SurfacePoint& p);

/// Riemannian gradient as an ambient tangent vector.
AmbientVector surface_gradient_ambient(const ThicknessField& field, const SurfacePoint& p);

/// Riemannian gradient in frame coordinates.
TangentVector surface_gradient(const ThicknessField& field, const SurfacePoint& p, const TangentFrame& frame);

/// Riemannian Hessian in frame coordinates:
/// H(v, w) = v^T D^2 d w + (d_nu d) <S v, w>, equal to the second derivative of
/// d along the projection retraction t -> retract(p, v, t).
TangentMatrix surface_hessian(const ThicknessField& field, const SurfacePoint& p, const TangentFrame& frame);

struct PositivityReport {
  std::size_t grid_points = 0;
  double min_value = 0.0;
  SurfacePoint argmin;
  bool positive = false;
};

/// Minimum of d over a deterministic grid (Fibonacci for N = 3).
PositivityReport validate_positivity(const ThicknessField& field, std::size_t grid_points = 10000);

}  // namespace retmap
