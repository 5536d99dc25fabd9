#include <numbers>

#include <benchmark/benchmark.h>

#include "retmap/analysis.hpp"
#include "retmap/domain.hpp"
#include "retmap/return_map.hpp"

namespace {

using namespace retmap;

RadialDomain zonal_sphere() {
  return RadialDomain(ThicknessField::zonal_legendre(ConvexCore::sphere(1.0), 0.5, 0.01));
}

void BM_RayFirstHitSphere(benchmark::State& state) {
  const ConvexCore core = ConvexCore::sphere(1.0);
  const AmbientVector origin(1.3, 0.4, 0.7);
  const AmbientVector dir = (-origin + AmbientVector(0.05, -0.02, 0.01)).normalized();
  for (auto _ : state) benchmark::DoNotOptimize(ray_first_hit(core, origin, dir));
}
BENCHMARK(BM_RayFirstHitSphere);

void BM_RayFirstHitEllipsoid(benchmark::State& state) {
  const ConvexCore core = ConvexCore::ellipsoid(2.0, 1.0, 1.0);
  const AmbientVector origin(2.5, 0.4, 0.7);
  const AmbientVector dir = (-origin + AmbientVector(0.05, -0.02, 0.01)).normalized();
  for (auto _ : state) benchmark::DoNotOptimize(ray_first_hit(core, origin, dir));
}
BENCHMARK(BM_RayFirstHitEllipsoid);

void BM_ReturnMapSphere(benchmark::State& state) {
  const RadialDomain dom = zonal_sphere();
  const SurfacePoint c = dom.core().point_at(std::numbers::pi / 4, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(return_map(dom, c));
}
BENCHMARK(BM_ReturnMapSphere);

void BM_ReturnMapEllipsoid(benchmark::State& state) {
  const RadialDomain dom(ThicknessField::zonal_legendre(ConvexCore::ellipsoid(2.0, 1.0, 1.0), 0.5, 0.01));
  const SurfacePoint c = dom.core().point_at(std::numbers::pi / 4, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(return_map(dom, c));
}
BENCHMARK(BM_ReturnMapEllipsoid);

void BM_LinearizeFd(benchmark::State& state) {
  const RadialDomain dom = zonal_sphere();
  const SurfacePoint c = dom.core().point_at(std::numbers::pi / 2, 0.0);
  const TangentFrame frame = dom.core().frame_at(c);
  for (auto _ : state) benchmark::DoNotOptimize(linearize_fd(dom, c, frame));
}
BENCHMARK(BM_LinearizeFd);

void BM_FindFixedPointsCircle(benchmark::State& state) {
  const RadialDomain dom(ThicknessField::fourier_2d(ConvexCore::circle(1.0), 0.5, {{2, 0.01}}));
  for (auto _ : state) benchmark::DoNotOptimize(find_fixed_points(dom, static_cast<std::size_t>(state.range(0)), 1e-10));
}
BENCHMARK(BM_FindFixedPointsCircle)->Arg(90)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
