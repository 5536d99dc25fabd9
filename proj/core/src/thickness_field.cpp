#include "retmap/thickness_field.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "retmap/error.hpp"
#include "retmap/sampling.hpp"

namespace retmap {
namespace {

Eigen::Vector3d inverse_axes(const ConvexCore& core) {
  Eigen::Vector3d w = Eigen::Vector3d::Zero();
  for (int i = 0; i < core.dim(); ++i) w[i] = 1.0 / core.semi_axes()[i];
  return w;
}

}  // namespace

LegendreJet legendre(int l, double x) {
  if (l < 0) throw GeometryError(ErrorKind::InvalidArgument, "negative Legendre degree");
  if (l == 0) return {1.0, 0.0, 0.0};
  // Bonnet recurrence for P, and P'_{n+1} = P'_{n-1} + (2n+1) P_n applied to
  // the first and second derivatives
  double p_prev = 1.0, p = x;
  double dp_prev = 0.0, dp = 1.0;
  double d2p_prev = 0.0, d2p = 0.0;
  for (int n = 1; n < l; ++n) {
    const double p_next = ((2.0 * n + 1.0) * x * p - n * p_prev) / (n + 1.0);
    const double dp_next = dp_prev + (2.0 * n + 1.0) * p;
    const double d2p_next = d2p_prev + (2.0 * n + 1.0) * dp;
    p_prev = p;
    p = p_next;
    dp_prev = dp;
    dp = dp_next;
    d2p_prev = d2p;
    d2p = d2p_next;
  }
  return {p, dp, d2p};
}

ThicknessField::ThicknessField(FieldKind kind, ConvexCore core) : kind_(kind), core_(std::move(core)) {}

ThicknessField ThicknessField::constant(const ConvexCore& core, double d0) {
  ThicknessField f(FieldKind::Constant, core);
  f.d0_ = d0;
  return f;
}

ThicknessField ThicknessField::zonal_legendre(const ConvexCore& core, double d0, double eps,
                                              const AmbientVector& axis) {
  ThicknessField f = zonal_series(core, d0, eps, {0.0, 0.0, 1.0}, axis);
  f.kind_ = FieldKind::ZonalLegendre;
  return f;
}

ThicknessField ThicknessField::zonal_series(const ConvexCore& core, double d0, double eps,
                                            std::vector<double> legendre_coefficients,
                                            const AmbientVector& axis) {
  const double n = axis.norm();
  if (!(n > 0.0)) throw GeometryError(ErrorKind::InvalidArgument, "zonal axis must be nonzero");
  if (core.dim() == 2 && axis.z() != 0.0) {
    throw GeometryError(ErrorKind::InvalidArgument, "zonal axis must lie in the plane of a planar core");
  }
  ThicknessField f(FieldKind::ZonalSeries, core);
  f.d0_ = d0;
  f.eps_ = eps;
  f.axis_ = axis / n;
  f.coefficients_ = std::move(legendre_coefficients);
  return f;
}

ThicknessField ThicknessField::fourier_2d(const ConvexCore& core, double d0, std::vector<FourierMode> modes) {
  if (core.dim() != 2) throw GeometryError(ErrorKind::InvalidArgument, "fourier_2d needs a planar core");
  ThicknessField f(FieldKind::Fourier2d, core);
  f.d0_ = d0;
  f.modes_ = std::move(modes);
  return f;
}

ThicknessField ThicknessField::scaled(double lambda, const ThicknessField& inner) {
  if (!(lambda > 0.0)) throw GeometryError(ErrorKind::InvalidArgument, "scale factor must be positive");
  ThicknessField f(FieldKind::Scaled, inner.core());
  f.lambda_ = lambda;
  f.inner_ = std::make_shared<const ThicknessField>(inner);
  return f;
}

std::string ThicknessField::describe() const {
  switch (kind_) {
    case FieldKind::Constant:
      return fmt::format("constant(d0={})", d0_);
    case FieldKind::ZonalLegendre:
      return fmt::format("zonal_legendre(d0={}, eps={}, axis=({}, {}, {}))", d0_, eps_, axis_.x(), axis_.y(),
                         axis_.z());
    case FieldKind::ZonalSeries:
      return fmt::format("zonal_series(d0={}, eps={}, coeffs=[{}])", d0_, eps_, fmt::join(coefficients_, ", "));
    case FieldKind::Fourier2d: {
      std::string modes;
      for (const auto& m : modes_) modes += fmt::format("{}{}:{}", modes.empty() ? "" : ", ", m.k, m.amplitude);
      return fmt::format("fourier_2d(d0={}, modes=[{}])", d0_, modes);
    }
    case FieldKind::Scaled:
      return fmt::format("scaled({}, {})", lambda_, inner_->describe());
  }
  return "unknown";
}

FieldJet ThicknessField::jet(const AmbientVector& x) const {
  FieldJet j;
  switch (kind_) {
    case FieldKind::Constant:
      j.value = d0_;
      return j;
    case FieldKind::ZonalLegendre:
    case FieldKind::ZonalSeries: {
      const Eigen::Vector3d du = axis_.cwiseProduct(inverse_axes(core_));
      const double u = du.dot(x);
      double f = 0.0;
      double df = 0.0;
      double d2f = 0.0;
      for (std::size_t l = 0; l < coefficients_.size(); ++l) {
        if (coefficients_[l] == 0.0) continue;
        const LegendreJet pl = legendre(static_cast<int>(l), u);
        f += coefficients_[l] * pl.p;
        df += coefficients_[l] * pl.dp;
        d2f += coefficients_[l] * pl.d2p;
      }
      j.value = d0_ + eps_ * f;
      j.gradient = eps_ * df * du;
      j.hessian = eps_ * d2f * du * du.transpose();
      return j;
    }
    case FieldKind::Fourier2d: {
      const Eigen::Vector3d w = inverse_axes(core_);
      const double q1 = x.x() * w.x();
      const double q2 = x.y() * w.y();
      const double r2 = q1 * q1 + q2 * q2;
      if (!(r2 > 0.0)) throw GeometryError(ErrorKind::InvalidArgument, "angle undefined at the centre");
      const double theta = std::atan2(q2, q1);
      double h = 0.0;
      double dh = 0.0;
      double d2h = 0.0;
      for (const auto& m : modes_) {
        const double k = m.k;
        h += m.amplitude * std::cos(k * theta);
        dh += -m.amplitude * k * std::sin(k * theta);
        d2h += -m.amplitude * k * k * std::cos(k * theta);
      }
      // theta(q) derivatives, then chain rule through q = diag(w) x
      Eigen::Vector3d grad_q(-q2 / r2, q1 / r2, 0.0);
      Eigen::Matrix3d hess_q = Eigen::Matrix3d::Zero();
      const double r4 = r2 * r2;
      hess_q(0, 0) = 2.0 * q1 * q2 / r4;
      hess_q(0, 1) = hess_q(1, 0) = (q2 * q2 - q1 * q1) / r4;
      hess_q(1, 1) = -2.0 * q1 * q2 / r4;
      const Eigen::Vector3d grad_theta = grad_q.cwiseProduct(w);
      const Eigen::Matrix3d hess_theta = w.asDiagonal() * hess_q * w.asDiagonal();
      j.value = d0_ + h;
      j.gradient = dh * grad_theta;
      j.hessian = d2h * grad_theta * grad_theta.transpose() + dh * hess_theta;
      return j;
    }
    case FieldKind::Scaled: {
      j = inner_->jet(x);
      j.value *= lambda_;
      j.gradient *= lambda_;
      j.hessian *= lambda_;
      return j;
    }
  }
  return j;
}

double eval(const ThicknessField& field, const SurfacePoint& p) {
  if (!field.core().on_surface(p.ambient)) {
    throw GeometryError(ErrorKind::OffSurface, "thickness evaluated off the core");
  }
  const double d = field.raw_value(p.ambient);
  if (!(d > 0.0)) {
    throw GeometryError(ErrorKind::InadmissibleThickness,
                        fmt::format("d = {} at theta = {}, phi = {}", d, p.chart.theta, p.chart.phi));
  }
  return d;
}

AmbientVector surface_gradient_ambient(const ThicknessField& field, const SurfacePoint& p) {
  const AmbientVector n = normal_at(field.core(), p);
  const AmbientVector g = field.jet(p.ambient).gradient;
  return g - n.dot(g) * n;
}

TangentVector surface_gradient(const ThicknessField& field, const SurfacePoint& p, const TangentFrame& frame) {
  return frame.coords(field.jet(p.ambient).gradient);
}

TangentMatrix surface_hessian(const ThicknessField& field, const SurfacePoint& p, const TangentFrame& frame) {
  const FieldJet j = field.jet(p.ambient);
  const AmbientVector n = normal_at(field.core(), p);
  const TangentMatrix s = shape_operator_at(field.core(), p, frame);
  TangentMatrix h = frame.vectors.transpose() * j.hessian * frame.vectors + n.dot(j.gradient) * s;
  return 0.5 * (h + h.transpose());
}

PositivityReport validate_positivity(const ThicknessField& field, std::size_t grid_points) {
  PositivityReport report;
  report.grid_points = grid_points;
  report.min_value = std::numeric_limits<double>::infinity();
  for (const auto& p : surface_grid(field.core(), grid_points)) {
    const double d = field.raw_value(p.ambient);
    if (d < report.min_value) {
      report.min_value = d;
      report.argmin = p;
    }
  }
  report.positive = report.min_value > 0.0;
  return report;
}

}  // namespace retmap
