#pragma once

#include <string>

#include "retmap/types.hpp"

namespace retmap {

/// Intrinsic chart coordinates. For N = 3, (theta, phi) are the parametric
/// colatitude/longitude of x = (a sin t cos p, b sin t sin p, c cos t); for
/// N = 2, theta is the parametric angle of x = (a cos t, b sin t) and phi = 0.
struct Chart {
  double theta = 0.0;
  double phi = 0.0;
};

struct SurfacePoint {
  Chart chart;
  AmbientVector ambient = AmbientVector::Zero();
};

/// Orthonormal basis of T_p(dC), N - 1 vectors, oriented so that for N = 3
/// e1 x e2 is the outward normal and for N = 2 e1 is the normal turned +90 deg.
struct TangentFrame {
  SurfacePoint base;
  FrameBasis vectors;

  int dim() const { return static_cast<int>(vectors.cols()); }
  AmbientVector to_ambient(const TangentVector& coords) const { return vectors * coords; }
  TangentVector coords(const AmbientVector& v) const { return vectors.transpose() * v; }
};

enum class CoreKind { Circle, Sphere, Ellipsoid };

/// Smooth convex core given by the quadric sum_i (x_i / a_i)^2 = 1, centred at
/// the origin. Immutable once built.
class ConvexCore {
 public:
  static ConvexCore circle(double radius);
  static ConvexCore sphere(double radius);
  static ConvexCore ellipsoid(double a, double b, double c);

  CoreKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const Eigen::Vector3d& semi_axes() const { return axes_; }
  AmbientVector center() const { return AmbientVector::Zero(); }
  bool is_round() const { return kind_ != CoreKind::Ellipsoid; }
  std::string describe() const;

  /// Implicit function: negative inside, zero on the boundary, positive outside.
  double implicit(const AmbientVector& x) const;
  /// Gradient of the implicit function.
  AmbientVector implicit_gradient(const AmbientVector& x) const;
  bool on_surface(const AmbientVector& x, double tol = kSurfaceTolerance) const;

  SurfacePoint point_at(double theta, double phi = 0.0) const;
  /// Surface point x = (a q_x, b q_y, c q_z) for a unit direction q.
  SurfacePoint point_from_direction(const AmbientVector& q) const;
  /// Throws OffSurface when |implicit(x)| > tol.
  SurfacePoint point_from_ambient(const AmbientVector& x, double tol = kSurfaceTolerance) const;
  Chart chart_of(const AmbientVector& x) const;

  /// Projection onto the surface: radial for round cores, Newton along the
  /// implicit gradient otherwise. Throws ProjectionFailed.
  SurfacePoint project(const AmbientVector& y) const;

  /// Deterministic frame: Gram-Schmidt on the chart tangents, with a chart
  /// rotated onto the x axis within 1e-6 of the poles.
  TangentFrame frame_at(const SurfacePoint& p) const;

 private:
  ConvexCore(CoreKind kind, int dim, Eigen::Vector3d axes);

  CoreKind kind_;
  int dim_;
  Eigen::Vector3d axes_;
};

/// Outward unit normal. Throws OffSurface.
AmbientVector normal_at(const ConvexCore& core, const SurfacePoint& p);

/// Ambient derivative of the normal field, D nu(p)[v], for tangent v.
AmbientVector normal_derivative(const ConvexCore& core, const SurfacePoint& p, const AmbientVector& v);

/// Shape operator S = -D nu in the given frame. Unit sphere gives -I.
TangentMatrix shape_operator_at(const ConvexCore& core, const SurfacePoint& p, const TangentFrame& frame);

/// Eigenvalues of the shape operator (ascending), same sign convention.
TangentVector principal_curvatures(const ConvexCore& core, const SurfacePoint& p);

enum class RayOutcome { Hit, Grazing, Miss };

struct RayIntersection {
  RayOutcome outcome = RayOutcome::Miss;
  double t = 0.0;
  SurfacePoint point;

  bool hit() const { return outcome != RayOutcome::Miss; }
};

/// Smallest t >= 0 with origin + t * direction on the boundary. The quadratic
/// is solved in closed form (q-method) and polished by one Newton step.
RayIntersection ray_first_hit(const ConvexCore& core, const AmbientVector& origin,
                              const AmbientVector& direction);

/// Ambient step p + h v followed by projection back onto the surface.
SurfacePoint retract(const ConvexCore& core, const SurfacePoint& p, const AmbientVector& v, double h);

}  // namespace retmap
