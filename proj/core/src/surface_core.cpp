#include "retmap/surface_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "retmap/error.hpp"

namespace retmap {
namespace {

constexpr double kPoleGuard = 1e-6;
constexpr double kGrazingTolerance = 1e-14;
constexpr int kMaxProjectionIterations = 50;

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a < 0.0) a += two_pi;
  return a;
}

void require_on_surface(const ConvexCore& core, const SurfacePoint& p) {
  if (!core.on_surface(p.ambient)) {
    throw GeometryError(ErrorKind::OffSurface,
                        fmt::format("point ({}, {}, {}) has implicit value {:.3e}", p.ambient.x(),
                                    p.ambient.y(), p.ambient.z(), core.implicit(p.ambient)));
  }
}

// G = x / a^2 restricted to the active coordinates; proportional to grad f.
AmbientVector scaled_gradient(const ConvexCore& core, const AmbientVector& x) {
  AmbientVector g = AmbientVector::Zero();
  const auto& a = core.semi_axes();
  for (int i = 0; i < core.dim(); ++i) g[i] = x[i] / (a[i] * a[i]);
  return g;
}

}  // namespace

ConvexCore::ConvexCore(CoreKind kind, int dim, Eigen::Vector3d axes)
    : kind_(kind), dim_(dim), axes_(std::move(axes)) {
  for (int i = 0; i < dim_; ++i) {
    if (!(axes_[i] > 0.0) || !std::isfinite(axes_[i])) {
      throw GeometryError(ErrorKind::InvalidArgument, "semi-axes must be positive and finite");
    }
  }
}

ConvexCore ConvexCore::circle(double radius) {
  return ConvexCore(CoreKind::Circle, 2, Eigen::Vector3d(radius, radius, 1.0));
}

ConvexCore ConvexCore::sphere(double radius) {
  return ConvexCore(CoreKind::Sphere, 3, Eigen::Vector3d(radius, radius, radius));
}

ConvexCore ConvexCore::ellipsoid(double a, double b, double c) {
  return ConvexCore(CoreKind::Ellipsoid, 3, Eigen::Vector3d(a, b, c));
}

std::string ConvexCore::describe() const {
  switch (kind_) {
    case CoreKind::Circle:
      return fmt::format("circle(r={})", axes_[0]);
    case CoreKind::Sphere:
      return fmt::format("sphere(r={})", axes_[0]);
    case CoreKind::Ellipsoid:
      return fmt::format("ellipsoid({}, {}, {})", axes_[0], axes_[1], axes_[2]);
  }
  return "unknown";
}

double ConvexCore::implicit(const AmbientVector& x) const {
  double s = 0.0;
  for (int i = 0; i < dim_; ++i) {
    const double q = x[i] / axes_[i];
    s += q * q;
  }
  return s - 1.0;
}

AmbientVector ConvexCore::implicit_gradient(const AmbientVector& x) const {
  return 2.0 * scaled_gradient(*this, x);
}

bool ConvexCore::on_surface(const AmbientVector& x, double tol) const {
  if (!x.allFinite()) return false;
  if (dim_ == 2 && x.z() != 0.0) return false;
  return std::abs(implicit(x)) <= tol;
}

Chart ConvexCore::chart_of(const AmbientVector& x) const {
  Eigen::Vector3d q = Eigen::Vector3d::Zero();
  for (int i = 0; i < dim_; ++i) q[i] = x[i] / axes_[i];
  Chart chart;
  if (dim_ == 2) {
    chart.theta = wrap_angle(std::atan2(q.y(), q.x()));
    return chart;
  }
  const double r = q.norm();
  chart.theta = r > 0.0 ? std::acos(std::clamp(q.z() / r, -1.0, 1.0)) : 0.0;
  chart.phi = std::hypot(q.x(), q.y()) < 1e-14 ? 0.0 : wrap_angle(std::atan2(q.y(), q.x()));
  return chart;
}

SurfacePoint ConvexCore::point_at(double theta, double phi) const {
  SurfacePoint p;
  if (dim_ == 2) {
    p.ambient = AmbientVector(axes_[0] * std::cos(theta), axes_[1] * std::sin(theta), 0.0);
  } else {
    p.ambient = AmbientVector(axes_[0] * std::sin(theta) * std::cos(phi),
                              axes_[1] * std::sin(theta) * std::sin(phi), axes_[2] * std::cos(theta));
  }
  p.chart = chart_of(p.ambient);
  return p;
}

SurfacePoint ConvexCore::point_from_direction(const AmbientVector& q) const {
  AmbientVector u = q;
  if (dim_ == 2) u.z() = 0.0;
  const double n = u.norm();
  if (!(n > 0.0)) throw GeometryError(ErrorKind::InvalidArgument, "zero direction");
  u /= n;
  SurfacePoint p;
  p.ambient = u.cwiseProduct(axes_);
  if (dim_ == 2) p.ambient.z() = 0.0;
  p.chart = chart_of(p.ambient);
  return p;
}

SurfacePoint ConvexCore::point_from_ambient(const AmbientVector& x, double tol) const {
  SurfacePoint p{chart_of(x), x};
  if (!on_surface(x, tol)) {
    throw GeometryError(ErrorKind::OffSurface,
                        fmt::format("implicit value {:.3e} exceeds tolerance {:.1e}", implicit(x), tol));
  }
  return p;
}

SurfacePoint ConvexCore::project(const AmbientVector& y_in) const {
  AmbientVector y = y_in;
  if (dim_ == 2) y.z() = 0.0;
  if (!y.allFinite()) throw GeometryError(ErrorKind::ProjectionFailed, "non-finite input");

  if (is_round()) {
    const double n = y.norm();
    if (!(n > 0.0)) throw GeometryError(ErrorKind::ProjectionFailed, "cannot project the centre");
    AmbientVector x = (axes_[0] / n) * y;
    return SurfacePoint{chart_of(x), x};
  }

  AmbientVector x = y;
  for (int it = 0; it < kMaxProjectionIterations; ++it) {
    const double f = implicit(x);
    if (std::abs(f) <= 1e-15) return SurfacePoint{chart_of(x), x};
    const AmbientVector g = implicit_gradient(x);
    const double g2 = g.squaredNorm();
    if (!(g2 > 0.0)) throw GeometryError(ErrorKind::ProjectionFailed, "vanishing implicit gradient");
    const AmbientVector step = (f / g2) * g;
    x -= step;
    if (step.norm() <= 1e-17 * (1.0 + x.norm())) break;
  }
  if (std::abs(implicit(x)) > kSurfaceTolerance) {
    throw GeometryError(ErrorKind::ProjectionFailed,
                        fmt::format("Newton projection did not converge in {} iterations",
                                    kMaxProjectionIterations));
  }
  return SurfacePoint{chart_of(x), x};
}

TangentFrame ConvexCore::frame_at(const SurfacePoint& p) const {
  require_on_surface(*this, p);
  TangentFrame frame;
  frame.base = p;
  const Eigen::Vector3d& a = axes_;
  Eigen::Vector3d q = Eigen::Vector3d::Zero();
  for (int i = 0; i < dim_; ++i) q[i] = p.ambient[i] / a[i];

  if (dim_ == 2) {
    frame.vectors.resize(3, 1);
    const double th = std::atan2(q.y(), q.x());
    Eigen::Vector3d t(-a[0] * std::sin(th), a[1] * std::cos(th), 0.0);
    frame.vectors.col(0) = t.normalized();
    return frame;
  }

  Eigen::Vector3d d1;
  Eigen::Vector3d d2;
  const double sin_t = std::hypot(q.x(), q.y());
  const double theta = std::atan2(sin_t, q.z());
  if (theta < kPoleGuard || std::numbers::pi - theta < kPoleGuard) {
    // chart with polar axis along x: q = (cos t', sin t' cos p', sin t' sin p')
    const double st = std::hypot(q.y(), q.z());
    const double ct = q.x();
    const double ph = std::atan2(q.z(), q.y());
    d1 = Eigen::Vector3d(-a[0] * st, a[1] * ct * std::cos(ph), a[2] * ct * std::sin(ph));
    d2 = Eigen::Vector3d(0.0, -a[1] * st * std::sin(ph), a[2] * st * std::cos(ph));
  } else {
    const double ct = q.z();
    const double ph = std::atan2(q.y(), q.x());
    d1 = Eigen::Vector3d(a[0] * ct * std::cos(ph), a[1] * ct * std::sin(ph), -a[2] * sin_t);
    d2 = Eigen::Vector3d(-a[0] * sin_t * std::sin(ph), a[1] * sin_t * std::cos(ph), 0.0);
  }
  const Eigen::Vector3d e1 = d1.normalized();
  const Eigen::Vector3d e2 = (d2 - d2.dot(e1) * e1).normalized();
  frame.vectors.resize(3, 2);
  frame.vectors.col(0) = e1;
  frame.vectors.col(1) = e2;
  return frame;
}

AmbientVector normal_at(const ConvexCore& core, const SurfacePoint& p) {
  require_on_surface(core, p);
  return scaled_gradient(core, p.ambient).normalized();
}

AmbientVector normal_derivative(const ConvexCore& core, const SurfacePoint& p, const AmbientVector& v) {
  require_on_surface(core, p);
  const AmbientVector g = scaled_gradient(core, p.ambient);
  const double gn = g.norm();
  const AmbientVector n = g / gn;
  AmbientVector dg = AmbientVector::Zero();
  const auto& a = core.semi_axes();
  for (int i = 0; i < core.dim(); ++i) dg[i] = v[i] / (a[i] * a[i]);
  return (dg - n.dot(dg) * n) / gn;
}

TangentMatrix shape_operator_at(const ConvexCore& core, const SurfacePoint& p, const TangentFrame& frame) {
  require_on_surface(core, p);
  const double gn = scaled_gradient(core, p.ambient).norm();
  const auto& a = core.semi_axes();
  const int k = frame.dim();
  TangentMatrix s(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      double acc = 0.0;
      for (int m = 0; m < core.dim(); ++m) {
        acc += frame.vectors(m, i) * frame.vectors(m, j) / (a[m] * a[m]);
      }
      s(i, j) = -acc / gn;
    }
  }
  return s;
}

TangentVector principal_curvatures(const ConvexCore& core, const SurfacePoint& p) {
  const TangentFrame frame = core.frame_at(p);
  const TangentMatrix s = shape_operator_at(core, p, frame);
  Eigen::SelfAdjointEigenSolver<TangentMatrix> eig(s);
  return eig.eigenvalues();
}

RayIntersection ray_first_hit(const ConvexCore& core, const AmbientVector& origin,
                              const AmbientVector& direction) {
  if (std::abs(direction.norm() - 1.0) > 1e-10) {
    throw GeometryError(ErrorKind::InvalidArgument, "ray direction must have unit norm");
  }
  const auto& ax = core.semi_axes();
  double qa = 0.0;
  double qb = 0.0;
  double qc = -1.0;
  for (int i = 0; i < core.dim(); ++i) {
    const double ia2 = 1.0 / (ax[i] * ax[i]);
    qa += direction[i] * direction[i] * ia2;
    qb += origin[i] * direction[i] * ia2;
    qc += origin[i] * origin[i] * ia2;
  }
  RayIntersection result;
  if (!(qa > 0.0)) return result;

  // monic form t^2 + 2 b t + c
  const double b = qb / qa;
  const double c = qc / qa;
  const double disc = b * b - c;
  constexpr double kNegativeRootSlack = 1e-12;

  if (disc < -kGrazingTolerance) return result;

  if (std::abs(disc) <= kGrazingTolerance) {
    const double t = -b;
    if (t < -kNegativeRootSlack) return result;
    result.outcome = RayOutcome::Grazing;
    result.t = std::max(t, 0.0);
    result.point = core.project(origin + result.t * direction);
    return result;
  }

  const double sq = std::sqrt(disc);
  const double q = -(b + std::copysign(sq, b));
  double lo = q;
  double hi = c / q;
  if (lo > hi) std::swap(lo, hi);
  double t;
  if (lo >= -kNegativeRootSlack) {
    t = lo;
  } else if (hi >= -kNegativeRootSlack) {
    t = hi;
  } else {
    return result;
  }
  t = std::max(t, 0.0);

  for (int polish = 0; polish < 2; ++polish) {
    const AmbientVector x = origin + t * direction;
    const double f = core.implicit(x);
    if (std::abs(f) <= 1e-15) break;
    const double df = core.implicit_gradient(x).dot(direction);
    if (std::abs(df) < 1e-8) break;
    t = std::max(t - f / df, 0.0);
  }

  result.outcome = RayOutcome::Hit;
  result.t = t;
  AmbientVector x = origin + t * direction;
  if (core.dim() == 2) x.z() = 0.0;
  result.point = SurfacePoint{core.chart_of(x), x};
  return result;
}

SurfacePoint retract(const ConvexCore& core, const SurfacePoint& p, const AmbientVector& v, double h) {
  const AmbientVector n = normal_at(core, p);
  if (std::abs(n.dot(v)) > 1e-8 * std::max(1.0, v.norm())) {
    throw GeometryError(ErrorKind::InvalidArgument, "retraction direction is not tangent");
  }
  if (h == 0.0) return p;
  return core.project(p.ambient + h * v);
}

}  // namespace retmap
