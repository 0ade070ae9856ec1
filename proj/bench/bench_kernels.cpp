// Serial reference vs OpenMP kernels on typical problem sizes.
// Thread count follows OMP_NUM_THREADS.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "s2m/kernels.hpp"

using namespace s2m;
namespace ks = s2m::kernels;

namespace {

std::vector<Vec3> points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-60, 60);
  std::vector<Vec3> p(n);
  for (Vec3& x : p) x = {u(gen), u(gen), u(gen)};
  return p;
}

std::vector<double> values(std::size_t n, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(gen);
  return v;
}

template <bool Parallel>
void softmin(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = points(n, 1), y = points(n, 2);
  const auto lw = values(n, 3, -8, -7), pot = values(n, 4, -50, 50);
  std::vector<double> out(n);
  for (auto _ : state) {
    if constexpr (Parallel) ks::omp::softmin(x, y, lw, pot, 20.0, 1.0, out);
    else ks::serial::softmin(x, y, lw, pot, 20.0, 1.0, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n));
}

template <bool Parallel>
void gaussian_gram(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto c = points(n, 5);
  std::vector<double> out(n * n);
  for (auto _ : state) {
    if constexpr (Parallel) ks::omp::gaussian_gram(c, 20.0, 1e-8, out);
    else ks::serial::gaussian_gram(c, 20.0, 1e-8, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n));
}

template <bool Parallel>
void gaussian_eval(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto c = points(n, 6), coef = points(n, 7), q = points(4 * n, 8);
  std::vector<Vec3> out(q.size());
  for (auto _ : state) {
    if constexpr (Parallel) ks::omp::gaussian_eval(c, coef, 20.0, q, out);
    else ks::serial::gaussian_eval(c, coef, 20.0, q, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * q.size()));
}

template <bool Parallel>
void trilinear_upsample(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const ks::GridShape s{n, n, n};
  const auto in = points(s.nodes(), 9);
  const std::size_t m = ks::upsampled_extent(n, 4);
  std::vector<Vec3> out(m * m * m);
  for (auto _ : state) {
    if constexpr (Parallel) ks::omp::trilinear_upsample(in, s, 4, out);
    else ks::serial::trilinear_upsample(in, s, 4, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * out.size()));
}

template <bool Parallel>
void separable_blur(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto img = values(n * n, 10, 0, 1);
  const auto taps = ks::gaussian_taps(2.0);
  std::vector<double> out(img.size());
  for (auto _ : state) {
    if constexpr (Parallel) ks::omp::separable_blur(img, n, n, taps, out);
    else ks::serial::separable_blur(img, n, n, taps, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * img.size()));
}

}  // namespace

BENCHMARK(softmin<false>)->Name("softmin/serial")->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(softmin<true>)->Name("softmin/omp")->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(gaussian_gram<false>)->Name("gaussian_gram/serial")->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(gaussian_gram<true>)->Name("gaussian_gram/omp")->Arg(2000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(gaussian_eval<false>)->Name("gaussian_eval/serial")->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(gaussian_eval<true>)->Name("gaussian_eval/omp")->Arg(1000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(trilinear_upsample<false>)->Name("trilinear_upsample/serial")->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(trilinear_upsample<true>)->Name("trilinear_upsample/omp")->Arg(16)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(separable_blur<false>)->Name("separable_blur/serial")->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(separable_blur<true>)->Name("separable_blur/omp")->Arg(256)->Unit(benchmark::kMicrosecond)->UseRealTime();

BENCHMARK_MAIN();
