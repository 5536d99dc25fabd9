#pragma once

#include <functional>
#include <vector>

#include "retmap/surface_core.hpp"

namespace retmap {

/// A map of the core boundary to itself, seen only through evaluation.
using SurfaceMap = std::function<SurfacePoint(const SurfacePoint&)>;

struct FixedPointCandidate {
  SurfacePoint point;
  /// |G(c) - c| at the reported point.
  double residual = 0.0;
};

struct FixedPointSearchOptions {
  std::size_t n_seeds = 1000;
  double tol = 1e-10;
  std::size_t max_iters = 100000;
  /// Fraction of grid points with residual below tol above which the map is
  /// reported as having a continuum of fixed points.
  double continuum_fraction = 0.5;
  /// Also look for fixed points that forward iteration cannot reach.
  bool residual_scan = true;
  unsigned threads = 1;
};

struct FixedPointSearchResult {
  std::vector<FixedPointCandidate> fixed_points;
  bool continuum = false;
  std::size_t grid_fixed_count = 0;
  std::vector<SurfacePoint> nonconvergent_seeds;
  std::size_t error_seeds = 0;
};

/// Fixed points of G from a deterministic seed grid:
///  1. residual |G(c) - c| on the grid, continuum flag;
///  2. every seed iterated to convergence and the limit polished;
///  3. local minima of the grid residual polished (catches repellers);
///  4. candidates with residual < tol clustered with radius 10 tol.
FixedPointSearchResult search_fixed_points(const ConvexCore& core, const SurfaceMap& map,
                                           const FixedPointSearchOptions& options);

/// Gauss-Newton on r(u) = G(retract(c, E u)) - retract(c, E u) in tangent
/// coordinates, with a finite-difference Jacobian and a truncated SVD solve,
/// so neutral directions are left alone.
FixedPointCandidate polish_fixed_point(const ConvexCore& core, const SurfaceMap& map, const SurfacePoint& start,
                                       int max_iterations = 30);

/// Greedy clustering in input order; the first member represents its cluster.
std::vector<FixedPointCandidate> cluster_points(const std::vector<FixedPointCandidate>& points, double radius);

/// Index of the representative within radius of p, or -1.
int nearest_cluster(const std::vector<FixedPointCandidate>& reps, const AmbientVector& p, double radius);

double distance_to_set(const AmbientVector& p, const std::vector<AmbientVector>& set);
double hausdorff_distance(const std::vector<AmbientVector>& a, const std::vector<AmbientVector>& b);

}  // namespace retmap
