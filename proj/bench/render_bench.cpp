// Serial references against the OpenMP kernels. Thread count is the benchmark argument.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>

#include "fixtures.hpp"
#include "kenburns/metrics.hpp"

using namespace kb;

namespace {

struct Scene {
  Size size{512, 512};
  Intrinsics K = Intrinsics::default_for(size);
  PointCloud cloud;
  CameraPose pose{0.15, -0.05, 0.6};

  Scene() {
    const ImageBuffer img = kbtest::coordinate_image(size.width, size.height);
    DepthMap d(size.width, size.height);
    for (int y = 0; y < size.height; ++y)
      for (int x = 0; x < size.width; ++x)
        d(x, y) = x > 160 && x < 352 && y > 128 && y < 448 ? 2.0 : 6.0 + 0.004 * y;
    cloud = build_point_cloud(img, d, K, extract_context_default(img));
  }
};

const Scene& scene() {
  static const Scene s;
  return s;
}

struct LossPair {
  InverseDepthMap a, b;
  LossPair() {
    std::mt19937 rng(1);
    a = kbtest::random_inverse(256, 256, rng);
    b = kbtest::random_inverse(256, 256, rng);
  }
};

const LossPair& losses() {
  static const LossPair p;
  return p;
}

void BM_Render(benchmark::State& st) {
  omp_set_num_threads(static_cast<int>(st.range(0)));
  const Scene& s = scene();
  for (auto _ : st) benchmark::DoNotOptimize(render(s.cloud, s.pose, s.K, s.size));
  st.counters["fps"] = benchmark::Counter(static_cast<double>(st.iterations()), benchmark::Counter::kIsRate);
}

void BM_RenderSerial(benchmark::State& st) {
  const Scene& s = scene();
  for (auto _ : st) benchmark::DoNotOptimize(serial::render(s.cloud, s.pose, s.K, s.size));
  st.counters["fps"] = benchmark::Counter(static_cast<double>(st.iterations()), benchmark::Counter::kIsRate);
}

Raster<double> dolly_zbuffer() {
  const Scene& s = scene();
  return kbtest::oracle_zbuffer(s.cloud, s.pose, s.K, s.size);
}

void BM_ZFilter(benchmark::State& st) {
  omp_set_num_threads(static_cast<int>(st.range(0)));
  const Raster<double> zb = dolly_zbuffer();
  for (auto _ : st) benchmark::DoNotOptimize(zfilter(zb));
}

void BM_ZFilterSerial(benchmark::State& st) {
  const Raster<double> zb = dolly_zbuffer();
  for (auto _ : st) benchmark::DoNotOptimize(serial::zfilter(zb));
}

void BM_LossGrad(benchmark::State& st) {
  omp_set_num_threads(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(loss_grad(losses().a, losses().b));
}

void BM_LossGradSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(serial::loss_grad(losses().a, losses().b));
}

void BM_GradLossDepth(benchmark::State& st) {
  omp_set_num_threads(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(grad_loss_depth(losses().a, losses().b));
}

void BM_GradLossDepthSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(serial::grad_loss_depth(losses().a, losses().b));
}

}  // namespace

BENCHMARK(BM_RenderSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Render)->Arg(1)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ZFilterSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ZFilter)->Arg(1)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_LossGradSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_LossGrad)->Arg(1)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_GradLossDepthSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_GradLossDepth)->Arg(1)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
