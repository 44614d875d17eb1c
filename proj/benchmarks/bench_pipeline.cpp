#include <benchmark/benchmark.h>

#include <random>

#include "thermfuse/detect.hpp"
#include "thermfuse/dsconv.hpp"
#include "thermfuse/fusion.hpp"
#include "thermfuse/image_ops.hpp"

namespace {

using namespace thermfuse;

GrayImage noise_frame(std::size_t w, std::size_t h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, 5);
  GrayImage img(w, h);
  const double cx = w / 2.0, cy = h / 2.0, rx = w / 5.0, ry = h / 3.5;
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      const double dx = (c - cx) / rx, dy = (r - cy) / ry;
      const double base = dx * dx + dy * dy <= 1.0 ? 210.0 : 30.0;
      img(r, c) = saturate_round(base + n(rng));
    }
  return img;
}

void BM_DetectFace(benchmark::State& state) {
  const auto img = noise_frame(160, 120, 1);
  for (auto _ : state) benchmark::DoNotOptimize(detect_face(img));
}
BENCHMARK(BM_DetectFace)->Unit(benchmark::kMicrosecond);

void BM_Fuse(benchmark::State& state, SolverKind kind) {
  const auto side = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 255);
  RealImage ir(side, side), vi(side, side);
  for (double& v : ir.pixels()) v = u(rng);
  for (std::size_t r = 0; r < side; ++r)
    for (std::size_t c = 0; c < side; ++c) vi(r, c) = ((r / 8 + c / 8) % 2) ? 200.0 : 50.0;
  const RegisteredPair pair(ir, vi);
  const auto solver = make_solver(kind);
  FusionParams params;
  for (auto _ : state) {
    const auto r = fuse(pair, params, *solver);
    state.counters["iterations"] = r.iterations;
    benchmark::DoNotOptimize(r.objective);
  }
}
BENCHMARK_CAPTURE(BM_Fuse, barrier, SolverKind::kBarrier)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Fuse, primal_dual, SolverKind::kPrimalDual)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Conv(benchmark::State& state, bool split) {
  const dsconv::Tensor3 f(32, 32, 16, 0.5);
  const dsconv::StandardKernel k(3, 16, 64, 0.1);
  const dsconv::DepthwiseKernel d(3, 16, 0.1);
  const dsconv::PointwiseKernel p(16, 64, 0.1);
  for (auto _ : state) {
    const auto r = split ? dsconv::separable(f, d, p) : dsconv::conv_standard(f, k);
    state.counters["macs"] = static_cast<double>(r.cost.macs);
    benchmark::DoNotOptimize(r.output.data().data());
  }
}
BENCHMARK_CAPTURE(BM_Conv, standard, false)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Conv, separable, true)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
