// Serial reference kernels against their OpenMP counterparts. Each pair runs
// on identical inputs; the `Omp` rows report the thread count as a counter.
#include <benchmark/benchmark.h>
#include <omp.h>

#include <vector>

#include "cbm/core/kernels.hpp"
#include "cbm/core/rng.hpp"

namespace k = cbm::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  cbm::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

void note_threads(benchmark::State& state) { state.counters["threads"] = omp_get_max_threads(); }

template <auto Kernel>
void bm_matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_vector(n * n, 1), b = random_vector(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    Kernel(a, b, c, n, n, n);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n * n * n));
  note_threads(state);
}

template <auto Kernel>
void bm_outer_product(benchmark::State& state) {
  const auto r = static_cast<std::size_t>(state.range(0));
  const std::size_t len = 1024;
  const auto f = random_vector(r * len, 3);
  std::vector<double> g(r * r);
  for (auto _ : state) {
    Kernel(f, r, len, g);
    benchmark::DoNotOptimize(g.data());
  }
  note_threads(state);
}

template <auto Kernel>
void bm_conv3x3(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const k::ConvDims d{16, 16, side, side};
  const auto in = random_vector(d.in_channels * side * side, 4);
  const auto w = random_vector(d.out_channels * d.in_channels * 9, 5);
  const std::vector<double> bias(d.out_channels, 0.1);
  std::vector<double> out(d.out_channels * side * side);
  for (auto _ : state) {
    Kernel(d, in, w, bias, out);
    benchmark::DoNotOptimize(out.data());
  }
  note_threads(state);
}

template <auto Kernel>
void bm_chebyshev(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_vector(n, 6);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(x, 2, n - 2, 0.2));
  note_threads(state);
}

template <auto Kernel>
void bm_nearest(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto pts = random_vector(n * 5, 7);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(pts, n, 5, 8));
  note_threads(state);
}

}  // namespace

BENCHMARK(bm_matmul<k::serial::matmul>)->Name("matmul/serial")->Arg(64)->Arg(256);
BENCHMARK(bm_matmul<k::omp::matmul>)->Name("matmul/omp")->Arg(64)->Arg(256);
BENCHMARK(bm_outer_product<k::serial::outer_product>)->Name("outer_product/serial")->Arg(36)->Arg(128);
BENCHMARK(bm_outer_product<k::omp::outer_product>)->Name("outer_product/omp")->Arg(36)->Arg(128);
BENCHMARK(bm_conv3x3<k::serial::conv3x3_forward>)->Name("conv3x3/serial")->Arg(32)->Arg(64);
BENCHMARK(bm_conv3x3<k::omp::conv3x3_forward>)->Name("conv3x3/omp")->Arg(32)->Arg(64);
BENCHMARK(bm_chebyshev<k::serial::chebyshev_matches>)->Name("chebyshev_matches/serial")->Arg(256)->Arg(1024);
BENCHMARK(bm_chebyshev<k::omp::chebyshev_matches>)->Name("chebyshev_matches/omp")->Arg(256)->Arg(1024);
BENCHMARK(bm_nearest<k::serial::nearest_neighbors>)->Name("nearest_neighbors/serial")->Arg(256)->Arg(1024);
BENCHMARK(bm_nearest<k::omp::nearest_neighbors>)->Name("nearest_neighbors/omp")->Arg(256)->Arg(1024);

BENCHMARK_MAIN();
