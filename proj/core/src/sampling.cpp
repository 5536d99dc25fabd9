#include "retmap/sampling.hpp"

#include <cmath>
#include <numbers>

namespace retmap {

std::vector<AmbientVector> fibonacci_directions(std::size_t n) {
  std::vector<AmbientVector> out;
  out.reserve(n);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * static_cast<double>(i);
    out.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return out;
}

std::vector<SurfacePoint> surface_grid(const ConvexCore& core, std::size_t n) {
  std::vector<SurfacePoint> out;
  out.reserve(n);
  if (core.dim() == 2) {
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back(core.point_at(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n)));
    }
    return out;
  }
  for (const auto& q : fibonacci_directions(n)) out.push_back(core.point_from_direction(q));
  return out;
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<SurfacePoint> random_surface_points(const ConvexCore& core, std::size_t n, Rng& rng) {
  std::vector<SurfacePoint> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    AmbientVector q(rng.normal(), rng.normal(), core.dim() == 3 ? rng.normal() : 0.0);
    out.push_back(core.point_from_direction(q));
  }
  return out;
}

}  // namespace retmap
