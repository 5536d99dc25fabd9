#include "retmap/fixed_point_search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/SVD>

#include "parallel.hpp"
#include "retmap/error.hpp"
#include "retmap/sampling.hpp"

namespace retmap {
namespace {

constexpr double kJacobianStep = 1e-6;
constexpr double kRelativeCutoff = 1e-7;

using Residual = Eigen::Vector3d;

Residual residual_at(const SurfaceMap& map, const SurfacePoint& c) { return map(c).ambient - c.ambient; }

SurfacePoint shift(const ConvexCore& core, const SurfacePoint& c, const TangentFrame& frame, const TangentVector& u) {
  return retract(core, c, frame.to_ambient(u), 1.0);
}

std::size_t neighbour_count(const ConvexCore& core) { return core.dim() == 3 ? 6 : 2; }

}  // namespace

FixedPointCandidate polish_fixed_point(const ConvexCore& core, const SurfaceMap& map, const SurfacePoint& start,
                                       int max_iterations) {
  SurfacePoint c = start;
  Residual r = residual_at(map, c);
  double rn = r.norm();
  for (int it = 0; it < max_iterations && rn > 0.0; ++it) {
    const TangentFrame frame = core.frame_at(c);
    const int k = frame.dim();
    Eigen::Matrix<double, 3, Eigen::Dynamic, 0, 3, 2> jac(3, k);
    for (int i = 0; i < k; ++i) {
      TangentVector e = TangentVector::Zero(k);
      e[i] = kJacobianStep;
      const Residual rp = residual_at(map, shift(core, c, frame, e));
      const Residual rm = residual_at(map, shift(core, c, frame, -e));
      jac.col(i) = (rp - rm) / (2.0 * kJacobianStep);
    }
    Eigen::JacobiSVD<decltype(jac)> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (!(sv[0] > 0.0)) break;
    TangentVector step = TangentVector::Zero(k);
    for (int i = 0; i < sv.size(); ++i) {
      if (sv[i] <= kRelativeCutoff * sv[0]) continue;
      step -= svd.matrixV().col(i) * (svd.matrixU().col(i).dot(r) / sv[i]);
    }
    if (!step.allFinite() || step.norm() == 0.0) break;

    bool improved = false;
    double scale = 1.0;
    for (int bt = 0; bt < 12; ++bt, scale *= 0.5) {
      SurfacePoint trial;
      Residual rt;
      try {
        trial = shift(core, c, frame, scale * step);
        rt = residual_at(map, trial);
      } catch (const GeometryError&) {
        continue;
      }
      if (rt.norm() < rn) {
        c = trial;
        r = rt;
        improved = true;
        break;
      }
    }
    if (!improved) break;
    rn = r.norm();
  }
  return FixedPointCandidate{c, rn};
}

std::vector<FixedPointCandidate> cluster_points(const std::vector<FixedPointCandidate>& points, double radius) {
  std::vector<FixedPointCandidate> reps;
  for (const auto& p : points) {
    if (nearest_cluster(reps, p.point.ambient, radius) < 0) reps.push_back(p);
  }
  return reps;
}

int nearest_cluster(const std::vector<FixedPointCandidate>& reps, const AmbientVector& p, double radius) {
  int best = -1;
  double best_dist = radius;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const double dist = (reps[i].point.ambient - p).norm();
    if (dist < best_dist || (best < 0 && dist <= radius)) {
      best = static_cast<int>(i);
      best_dist = dist;
    }
  }
  return best;
}

double distance_to_set(const AmbientVector& p, const std::vector<AmbientVector>& set) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& q : set) best = std::min(best, (p - q).norm());
  return best;
}

double hausdorff_distance(const std::vector<AmbientVector>& a, const std::vector<AmbientVector>& b) {
  double h = 0.0;
  for (const auto& p : a) h = std::max(h, distance_to_set(p, b));
  for (const auto& q : b) h = std::max(h, distance_to_set(q, a));
  return h;
}

FixedPointSearchResult search_fixed_points(const ConvexCore& core, const SurfaceMap& map,
                                           const FixedPointSearchOptions& options) {
  if (!(options.tol > 0.0)) throw GeometryError(ErrorKind::InvalidArgument, "tolerance must be positive");
  const std::vector<SurfacePoint> grid = surface_grid(core, options.n_seeds);
  const std::size_t n = grid.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  FixedPointSearchResult result;

  std::vector<double> residual(n, nan);
  detail::parallel_for(n, options.threads, [&](std::size_t i) {
    try {
      residual[i] = residual_at(map, grid[i]).norm();
    } catch (const GeometryError&) {
    }
  });
  for (double r : residual) {
    if (r < options.tol) ++result.grid_fixed_count;
  }
  if (n > 0 && static_cast<double>(result.grid_fixed_count) > options.continuum_fraction * static_cast<double>(n)) {
    result.continuum = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (residual[i] < options.tol) result.fixed_points.push_back({grid[i], residual[i]});
    }
    return result;
  }

  // forward iteration finds the attractors
  enum class SeedState { Converged, NotConverged, Failed };
  std::vector<SeedState> state(n, SeedState::Failed);
  std::vector<FixedPointCandidate> limits(n);
  detail::parallel_for(n, options.threads, [&](std::size_t i) {
    try {
      SurfacePoint c = grid[i];
      state[i] = SeedState::NotConverged;
      for (std::size_t k = 0; k < options.max_iters; ++k) {
        SurfacePoint next = map(c);
        const double disp = (next.ambient - c.ambient).norm();
        c = next;
        if (disp < options.tol) {
          state[i] = SeedState::Converged;
          break;
        }
      }
      if (state[i] == SeedState::Converged) limits[i] = polish_fixed_point(core, map, c);
    } catch (const GeometryError&) {
      state[i] = SeedState::Failed;
    }
  });

  std::vector<FixedPointCandidate> candidates;
  for (std::size_t i = 0; i < n; ++i) {
    if (state[i] == SeedState::Converged && limits[i].residual < options.tol) {
      candidates.push_back(limits[i]);
    } else if (state[i] == SeedState::Failed) {
      ++result.error_seeds;
    } else {
      result.nonconvergent_seeds.push_back(grid[i]);
    }
  }

  // residual minima over grid neighbourhoods catch fixed points iteration cannot reach
  if (options.residual_scan) {
    const std::size_t k = std::min(neighbour_count(core), n > 0 ? n - 1 : 0);
    std::vector<std::size_t> minima;
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (std::isnan(residual[i])) continue;
      std::iota(order.begin(), order.end(), 0);
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k + 1), order.end(),
                        [&](std::size_t a, std::size_t b) {
                          return (grid[a].ambient - grid[i].ambient).squaredNorm() <
                                 (grid[b].ambient - grid[i].ambient).squaredNorm();
                        });
      bool is_min = true;
      for (std::size_t m = 0; m <= k; ++m) {
        const std::size_t j = order[m];
        if (j == i || std::isnan(residual[j])) continue;
        if (residual[j] < residual[i]) {
          is_min = false;
          break;
        }
      }
      if (is_min) minima.push_back(i);
    }
    std::vector<FixedPointCandidate> polished(minima.size());
    std::vector<char> ok(minima.size(), 0);
    detail::parallel_for(minima.size(), options.threads, [&](std::size_t m) {
      try {
        polished[m] = polish_fixed_point(core, map, grid[minima[m]]);
        ok[m] = 1;
      } catch (const GeometryError&) {
      }
    });
    for (std::size_t m = 0; m < minima.size(); ++m) {
      if (ok[m] && polished[m].residual < options.tol) candidates.push_back(polished[m]);
    }
  }

  result.fixed_points = cluster_points(candidates, 10.0 * options.tol);
  return result;
}

}  // namespace retmap
