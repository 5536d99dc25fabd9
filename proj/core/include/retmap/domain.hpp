#pragma once

#include <iosfwd>
#include <vector>

#include "retmap/thickness_field.hpp"

namespace retmap {

/// Outer domain given as the radial graph {c + r nu(c) : 0 <= r < d(c)} over
/// the core boundary, together with the core itself.
class RadialDomain {
 public:
  explicit RadialDomain(ThicknessField field) : field_(std::move(field)) {}

  const ConvexCore& core() const { return field_.core(); }
  const ThicknessField& field() const { return field_; }

 private:
  ThicknessField field_;
};

struct OuterBoundaryPoint {
  SurfacePoint base;
  AmbientVector ambient = AmbientVector::Zero();
  AmbientVector inward_normal = AmbientVector::Zero();
  double thickness = 0.0;
};

/// x = Phi(c) = c + d(c) nu(c) and the inward unit normal of the outer
/// boundary, built from the exact tangents D Phi(c)[e_i].
/// Throws InadmissibleThickness, ImmersionFailure.
OuterBoundaryPoint radial_map(const RadialDomain& dom, const SurfacePoint& c);

/// Columns D Phi(c)[e_i] = e_i + d D nu(c)[e_i] + <grad d, e_i> nu(c).
FrameBasis outer_tangent_frame(const RadialDomain& dom, const SurfacePoint& c, const TangentFrame& frame);

/// Membership of x in the closed outer domain, decided through the nearest
/// point on the core boundary.
bool contains(const RadialDomain& dom, const AmbientVector& x);

/// Nearest point on the core boundary to an exterior point x.
SurfacePoint nearest_core_point(const ConvexCore& core, const AmbientVector& x);

struct AdmissibilityRow {
  double theta = 0.0;
  double phi = 0.0;
  double d = 0.0;
  double min_sv_dphi = 0.0;
  bool normal_ray_hits = false;
};

struct AdmissibilityReport {
  std::vector<AdmissibilityRow> rows;
  double min_d = 0.0;
  double min_singular_value = 0.0;
  double hit_rate = 0.0;
  bool admissible = false;
};

inline constexpr double kMinImmersionSingularValue = 1e-8;

/// Grid diagnostic: positivity of d, immersion of Phi and whether every
/// inward-normal ray from the outer boundary reaches the core.
AdmissibilityReport admissibility_check(const RadialDomain& dom, std::size_t grid_size, unsigned threads = 1);

/// CSV: theta,phi,d,min_sv_DPhi,normal_ray_hits
void write_csv(std::ostream& os, const AdmissibilityReport& report);

}  // namespace retmap
