#include <benchmark/benchmark.h>

#include "mather/kernels.hpp"
#include "mather/random.hpp"
#include "mather/transfer.hpp"
#include "mather/weakkam.hpp"

using namespace mather;
using kernels::Exec;

namespace {

kernels::RowMatrix random_matrix(int n, std::uint64_t seed) {
  Rng rng(seed);
  kernels::RowMatrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = rng.uniform();
  return m;
}

DenseVector random_vector(int n, std::uint64_t seed) {
  Rng rng(seed);
  DenseVector v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform();
  return v;
}

Exec exec_of(const benchmark::State& s) { return s.range(1) ? Exec::Parallel : Exec::Serial; }

void BM_matvec(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto k = random_matrix(n, 1);
  const auto x = random_vector(n, 2);
  DenseVector y;
  for (auto _ : state) {
    kernels::matvec(k, x, y, exec_of(state));
    benchmark::DoNotOptimize(y.data());
  }
}

void BM_minplus_columns(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto c = random_matrix(n, 3);
  const auto u = random_vector(n, 4);
  DenseVector out;
  for (auto _ : state) {
    kernels::minplus_columns(c, u, out, nullptr, exec_of(state));
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_minplus_product(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto a = random_matrix(n, 5);
  const auto b = random_matrix(n, 6);
  kernels::RowMatrix out;
  kernels::IndexMatrix arg;
  for (auto _ : state) {
    kernels::minplus_product(a, b, out, arg, exec_of(state));
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_build_kernel(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const DiscreteLagrangian lag(two_maxima_potential(), 0.0);
  const TorusGrid grid(1, m);
  for (auto _ : state) {
    auto k = build_kernel(lag, grid, 100.0, exec_of(state));
    benchmark::DoNotOptimize(k.scaled.data());
  }
}

void BM_action_matrix(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const DiscreteLagrangian lag(cosine_potential(0.05, 0.02), 0.1);
  const TorusGrid grid(1, m);
  for (auto _ : state) {
    auto a = action_matrix(lag, grid, exec_of(state));
    benchmark::DoNotOptimize(a.cost.data());
  }
}

// second argument: 0 serial, 1 OpenMP
BENCHMARK(BM_matvec)->ArgsProduct({{256, 1024, 4096}, {0, 1}});
BENCHMARK(BM_minplus_columns)->ArgsProduct({{256, 1024, 4096}, {0, 1}});
BENCHMARK(BM_minplus_product)->ArgsProduct({{64, 128, 256}, {0, 1}});
BENCHMARK(BM_build_kernel)->ArgsProduct({{128, 512}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_action_matrix)->ArgsProduct({{128, 512}, {0, 1}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
