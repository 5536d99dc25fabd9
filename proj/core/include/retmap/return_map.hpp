#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "retmap/domain.hpp"
#include "retmap/error.hpp"

namespace retmap {

struct ReciprocalHit {
  SurfacePoint point;
  double t = 0.0;
  bool grazing = false;
};

/// pi(x): first point of the core on the ray x + t n(x), t >= 0.
/// Throws NormalRayMissesCore.
ReciprocalHit reciprocal_map(const RadialDomain& dom, const OuterBoundaryPoint& x);

/// F(c) = pi(Phi(c)), computed by exact ray geometry.
SurfacePoint return_map(const RadialDomain& dom, const SurfacePoint& c);

enum class Termination { Converged, MaxIterations, Error };

std::string_view to_string(Termination t) noexcept;

struct OrbitRecord {
  SurfacePoint seed;
  /// c_0 = seed, c_1 = F(c_0), ... including the last computed iterate. A
  /// compact record keeps only the seed and the last iterate.
  std::vector<SurfacePoint> points;
  std::vector<double> thickness_values;
  /// displacement_norms[k] = |c_{k+1} - c_k|.
  std::vector<double> displacement_norms;
  Termination terminated = Termination::MaxIterations;
  std::optional<ErrorKind> error;
  std::string message;
  /// |grad d| at the limit point when converged.
  double limit_grad_norm = 0.0;
  /// Number of applications of F.
  std::size_t iterations = 0;

  std::size_t steps() const { return iterations; }
  const SurfacePoint& last() const { return points.back(); }
};

inline constexpr std::size_t kDefaultMaxIterations = 100000;
inline constexpr double kDefaultOrbitTolerance = 1e-10;

/// Iterates F until |c_{k+1} - c_k| < tol or max_iters applications of F.
/// Geometry errors end the orbit with terminated = Error.
OrbitRecord iterate_orbit(const RadialDomain& dom, const SurfacePoint& seed,
                          std::size_t max_iters = kDefaultMaxIterations, double tol = kDefaultOrbitTolerance,
                          bool keep_path = true);

/// Orbits for many seeds; results are in seed order for any thread count.
std::vector<OrbitRecord> iterate_orbits(const RadialDomain& dom, const std::vector<SurfacePoint>& seeds,
                                        std::size_t max_iters, double tol, unsigned threads = 1,
                                        bool keep_path = false);

struct DescentAudit {
  std::size_t samples = 0;
  std::size_t violations = 0;
  std::size_t errors = 0;
  /// max over samples of d(F(c)) - d(c).
  double max_increase = 0.0;
};

/// Counts points where d(F(c)) > d(c) + slack.
DescentAudit descent_audit(const RadialDomain& dom, const std::vector<SurfacePoint>& points, double slack = 1e-12,
                           unsigned threads = 1);

/// CSV: step,theta,phi,x,y,z,d,displacement (the last row has no displacement).
void write_csv(std::ostream& os, const OrbitRecord& orbit);

}  // namespace retmap
