#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "retmap/surface_core.hpp"

namespace retmap {

/// Unit directions on a Fibonacci lattice; deterministic, near-uniform.
std::vector<AmbientVector> fibonacci_directions(std::size_t n);

/// Deterministic near-uniform grid on the core: Fibonacci lattice for N = 3,
/// equally spaced parametric angles for N = 2.
std::vector<SurfacePoint> surface_grid(const ConvexCore& core, std::size_t n);

/// mt19937_64 with a fixed double conversion, so draws are reproducible
/// across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller.
  double normal();

 private:
  std::mt19937_64 engine_;
};

/// Random surface points from uniformly distributed directions.
std::vector<SurfacePoint> random_surface_points(const ConvexCore& core, std::size_t n, Rng& rng);

}  // namespace retmap
