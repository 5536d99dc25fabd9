#include "retmap/return_map.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "parallel.hpp"
#include "retmap/csv.hpp"

namespace retmap {

ReciprocalHit reciprocal_map(const RadialDomain& dom, const OuterBoundaryPoint& x) {
  const RayIntersection hit = ray_first_hit(dom.core(), x.ambient, x.inward_normal);
  if (!hit.hit()) {
    throw GeometryError(ErrorKind::NormalRayMissesCore,
                        fmt::format("inward normal ray from ({}, {}, {}) misses the core", x.ambient.x(),
                                    x.ambient.y(), x.ambient.z()));
  }
  return ReciprocalHit{hit.point, hit.t, hit.outcome == RayOutcome::Grazing};
}

SurfacePoint return_map(const RadialDomain& dom, const SurfacePoint& c) {
  return reciprocal_map(dom, radial_map(dom, c)).point;
}

std::string_view to_string(Termination t) noexcept {
  switch (t) {
    case Termination::Converged:
      return "Converged";
    case Termination::MaxIterations:
      return "MaxIterations";
    case Termination::Error:
      return "Error";
  }
  return "unknown";
}

OrbitRecord iterate_orbit(const RadialDomain& dom, const SurfacePoint& seed, std::size_t max_iters, double tol,
                          bool keep_path) {
  if (!(tol > 0.0)) throw GeometryError(ErrorKind::InvalidArgument, "orbit tolerance must be positive");
  OrbitRecord rec;
  rec.seed = seed;
  SurfacePoint c = seed;
  try {
    double d = eval(dom.field(), c);
    rec.points.push_back(c);
    rec.thickness_values.push_back(d);
    for (std::size_t k = 0; k < max_iters; ++k) {
      SurfacePoint next = return_map(dom, c);
      const double dn = eval(dom.field(), next);
      const double disp = (next.ambient - c.ambient).norm();
      ++rec.iterations;
      if (keep_path || rec.points.size() == 1) {
        rec.points.push_back(next);
        rec.thickness_values.push_back(dn);
        rec.displacement_norms.push_back(disp);
      } else {
        rec.points.back() = next;
        rec.thickness_values.back() = dn;
        rec.displacement_norms.back() = disp;
      }
      c = next;
      if (disp < tol) {
        rec.terminated = Termination::Converged;
        rec.limit_grad_norm = surface_gradient_ambient(dom.field(), c).norm();
        break;
      }
    }
  } catch (const GeometryError& e) {
    rec.terminated = Termination::Error;
    rec.error = e.kind();
    rec.message = e.what();
  }
  if (rec.points.empty()) {
    rec.points.push_back(seed);
    rec.thickness_values.push_back(std::numeric_limits<double>::quiet_NaN());
  }
  return rec;
}

std::vector<OrbitRecord> iterate_orbits(const RadialDomain& dom, const std::vector<SurfacePoint>& seeds,
                                        std::size_t max_iters, double tol, unsigned threads, bool keep_path) {
  std::vector<OrbitRecord> out(seeds.size());
  detail::parallel_for(seeds.size(), threads,
                       [&](std::size_t i) { out[i] = iterate_orbit(dom, seeds[i], max_iters, tol, keep_path); });
  return out;
}

DescentAudit descent_audit(const RadialDomain& dom, const std::vector<SurfacePoint>& points, double slack,
                           unsigned threads) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> increase(points.size(), nan);
  detail::parallel_for(points.size(), threads, [&](std::size_t i) {
    try {
      const double d0 = eval(dom.field(), points[i]);
      const double d1 = eval(dom.field(), return_map(dom, points[i]));
      increase[i] = d1 - d0;
    } catch (const GeometryError&) {
    }
  });
  DescentAudit audit;
  audit.samples = points.size();
  audit.max_increase = -std::numeric_limits<double>::infinity();
  for (double inc : increase) {
    if (std::isnan(inc)) {
      ++audit.errors;
      continue;
    }
    audit.max_increase = std::max(audit.max_increase, inc);
    if (inc > slack) ++audit.violations;
  }
  return audit;
}

void write_csv(std::ostream& os, const OrbitRecord& orbit) {
  os << "step,theta,phi,x,y,z,d,displacement\n";
  for (std::size_t k = 0; k < orbit.points.size(); ++k) {
    const SurfacePoint& p = orbit.points[k];
    const double disp =
        k < orbit.displacement_norms.size() ? orbit.displacement_norms[k] : std::numeric_limits<double>::quiet_NaN();
    os << k << ',' << csv::num(p.chart.theta) << ',' << csv::num(p.chart.phi) << ',' << csv::num(p.ambient.x())
       << ',' << csv::num(p.ambient.y()) << ',' << csv::num(p.ambient.z()) << ',' << csv::num(orbit.thickness_values[k])
       << ',' << csv::num(disp) << '\n';
  }
}

}  // namespace retmap
