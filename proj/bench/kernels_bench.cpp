// Serial reference kernels against the OpenMP ones at the sizes training uses.
#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>

#include "motif/cluster.hpp"
#include "motif/model.hpp"
#include "motif/numkernel.hpp"

namespace {

motif::DenseMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  motif::DenseMatrix m(rows, cols);
  for (double& v : m.values()) v = g(rng);
  return m;
}

template <auto Kernel>
void BM_matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n, 1024, 1);
  const auto b = random_matrix(1024, 256, 2);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * 1024 * 256));
}
BENCHMARK(BM_matmul<motif::kernels::reference::matmul>)->Name("matmul/reference")->Arg(64)->Arg(256);
BENCHMARK(BM_matmul<motif::kernels::matmul>)->Name("matmul/openmp")->Arg(64)->Arg(256);

template <auto Kernel>
void BM_conv(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  motif::FeatureGrid input(256, 13, 20);
  for (double& v : input.values()) v = g(rng);
  std::vector<double> weights(256 * k * k);
  for (double& v : weights) v = g(rng);
  const motif::KernelBankView bank{1, 256, k, weights};
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(input, bank, {}));
}
BENCHMARK(BM_conv<motif::kernels::reference::conv2d_valid>)->Name("conv/reference")->DenseRange(2, 6, 2);
BENCHMARK(BM_conv<motif::kernels::conv2d_valid>)->Name("conv/openmp")->DenseRange(2, 6, 2);

void BM_assign(benchmark::State& state) {
  const int threads = static_cast<int>(state.range(0));
  const auto points = motif::l2_normalized(random_matrix(10000, 256, 4));
  const auto centroids = motif::l2_normalized(random_matrix(20, 256, 5));
  const int saved = omp_get_max_threads();
  omp_set_num_threads(threads);
  for (auto _ : state) benchmark::DoNotOptimize(motif::assign_nearest(points, centroids));
  omp_set_num_threads(saved);
}
BENCHMARK(BM_assign)->Name("kmeans_assign/threads")->Arg(1)->Arg(4);

void BM_head_step(benchmark::State& state) {
  motif::HeadConfig cfg;
  const auto params = motif::init_params(cfg, 7);
  const auto x = random_matrix(256, 1024, 6);
  for (auto _ : state) benchmark::DoNotOptimize(motif::forward_batch(params, x));
}
BENCHMARK(BM_head_step)->Name("head_forward/batch256");

}  // namespace

BENCHMARK_MAIN();
