#include "retmap/domain.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <fmt/format.h>

#include "parallel.hpp"
#include "retmap/csv.hpp"
#include "retmap/error.hpp"
#include "retmap/sampling.hpp"

namespace retmap {
namespace {

constexpr double kImmersionTolerance = 1e-12;

FrameBasis tangent_images(const ConvexCore& core, const SurfacePoint& c, const TangentFrame& frame, double d,
                          const AmbientVector& grad) {
  const AmbientVector nu = normal_at(core, c);
  FrameBasis out(3, frame.dim());
  for (int i = 0; i < frame.dim(); ++i) {
    const AmbientVector v = frame.vectors.col(i);
    out.col(i) = v + d * normal_derivative(core, c, v) + grad.dot(v) * nu;
  }
  return out;
}

}  // namespace

FrameBasis outer_tangent_frame(const RadialDomain& dom, const SurfacePoint& c, const TangentFrame& frame) {
  const FieldJet j = dom.field().jet(c.ambient);
  return tangent_images(dom.core(), c, frame, j.value, j.gradient);
}

OuterBoundaryPoint radial_map(const RadialDomain& dom, const SurfacePoint& c) {
  const ConvexCore& core = dom.core();
  const double d = eval(dom.field(), c);
  const AmbientVector nu = normal_at(core, c);

  OuterBoundaryPoint out;
  out.base = c;
  out.thickness = d;
  out.ambient = c.ambient + d * nu;

  const TangentFrame frame = core.frame_at(c);
  const FrameBasis t = outer_tangent_frame(dom, c, frame);
  AmbientVector n;
  if (core.dim() == 3) {
    n = AmbientVector(t.col(0)).cross(AmbientVector(t.col(1)));
  } else {
    n = AmbientVector(-t(1, 0), t(0, 0), 0.0);
  }
  const double len = n.norm();
  if (!(len >= kImmersionTolerance)) {
    throw GeometryError(ErrorKind::ImmersionFailure,
                        fmt::format("degenerate outer tangents at theta = {}, phi = {}", c.chart.theta,
                                    c.chart.phi));
  }
  n /= len;
  if (n.dot(core.center() - out.ambient) < 0.0) n = -n;
  out.inward_normal = n;
  return out;
}

SurfacePoint nearest_core_point(const ConvexCore& core, const AmbientVector& x) {
  if (core.is_round()) return core.project(x);
  // c_i = x_i a_i^2 / (a_i^2 + t) with t >= 0 solving sum (x_i a_i / (a_i^2 + t))^2 = 1;
  // the left side is convex and decreasing in t, so Newton from t = 0 is monotone.
  const auto& a = core.semi_axes();
  if (core.implicit(x) <= 0.0) {
    throw GeometryError(ErrorKind::InvalidArgument, "nearest_core_point expects an exterior point");
  }
  double t = 0.0;
  for (int it = 0; it < 100; ++it) {
    double g = -1.0;
    double dg = 0.0;
    for (int i = 0; i < core.dim(); ++i) {
      const double s = a[i] * a[i] + t;
      const double r = x[i] * a[i] / s;
      g += r * r;
      dg += -2.0 * r * r / s;
    }
    const double step = g / dg;
    t -= step;
    if (std::abs(step) <= 1e-16 * (1.0 + t)) break;
  }
  AmbientVector c = AmbientVector::Zero();
  for (int i = 0; i < core.dim(); ++i) c[i] = x[i] * a[i] * a[i] / (a[i] * a[i] + t);
  return core.project(c);
}

bool contains(const RadialDomain& dom, const AmbientVector& x) {
  const ConvexCore& core = dom.core();
  if (core.dim() == 2 && x.z() != 0.0) return false;
  if (core.implicit(x) <= 0.0) return true;
  const SurfacePoint c = nearest_core_point(core, x);
  return (x - c.ambient).norm() <= dom.field().raw_value(c.ambient);
}

AdmissibilityReport admissibility_check(const RadialDomain& dom, std::size_t grid_size, unsigned threads) {
  const ConvexCore& core = dom.core();
  const std::vector<SurfacePoint> grid = surface_grid(core, grid_size);
  AdmissibilityReport report;
  report.rows.resize(grid.size());

  detail::parallel_for(grid.size(), threads, [&](std::size_t i) {
    const SurfacePoint& c = grid[i];
    AdmissibilityRow& row = report.rows[i];
    row.theta = c.chart.theta;
    row.phi = c.chart.phi;
    const FieldJet j = dom.field().jet(c.ambient);
    row.d = j.value;
    const FrameBasis t = tangent_images(core, c, core.frame_at(c), j.value, j.gradient);
    Eigen::JacobiSVD<FrameBasis> svd(t);
    row.min_sv_dphi = svd.singularValues().minCoeff();
    row.normal_ray_hits = false;
    if (!(row.d > 0.0)) return;
    try {
      const OuterBoundaryPoint x = radial_map(dom, c);
      row.normal_ray_hits = ray_first_hit(core, x.ambient, x.inward_normal).hit();
    } catch (const GeometryError&) {
      row.normal_ray_hits = false;
    }
  });

  report.min_d = std::numeric_limits<double>::infinity();
  report.min_singular_value = std::numeric_limits<double>::infinity();
  std::size_t hits = 0;
  for (const auto& row : report.rows) {
    report.min_d = std::min(report.min_d, row.d);
    report.min_singular_value = std::min(report.min_singular_value, row.min_sv_dphi);
    if (row.normal_ray_hits) ++hits;
  }
  report.hit_rate = report.rows.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(report.rows.size());
  report.admissible = !report.rows.empty() && report.min_d > 0.0 &&
                      report.min_singular_value > kMinImmersionSingularValue && hits == report.rows.size();
  return report;
}

void write_csv(std::ostream& os, const AdmissibilityReport& report) {
  os << "theta,phi,d,min_sv_DPhi,normal_ray_hits\n";
  for (const auto& row : report.rows) {
    os << csv::num(row.theta) << ',' << csv::num(row.phi) << ',' << csv::num(row.d) << ','
       << csv::num(row.min_sv_dphi) << ',' << (row.normal_ray_hits ? 1 : 0) << '\n';
  }
}

}  // namespace retmap
