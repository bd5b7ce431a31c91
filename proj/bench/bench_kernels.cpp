// Serial reference kernels next to the OpenMP ones. The thread argument is
// the OpenMP worker count; the reference runs ignore it.

#include <random>

#include <benchmark/benchmark.h>

#include "mtf/data.hpp"
#include "mtf/graphs.hpp"
#include "mtf/parallel.hpp"
#include "mtf/reference.hpp"
#include "mtf/solver.hpp"

namespace {

mtf::DenseMatrix random_dense(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  mtf::DenseMatrix m(rows, cols);
  for (double& v : m.values()) v = u(rng);
  return m;
}

mtf::SparseMatrix random_sparse(std::size_t rows, std::size_t cols, double density,
                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<mtf::Triplet> entries;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      if (u(rng) < density) entries.push_back({i, j, u(rng)});
  return mtf::SparseMatrix::from_triplets(rows, cols, std::move(entries));
}

void BM_DenseMatmulReference(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_dense(n, n, 1), b = random_dense(n, 8, 2);
  for (auto _ : state) benchmark::DoNotOptimize(mtf::reference::matmul(a, b));
}

void BM_DenseMatmulParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  mtf::parallel::set_thread_count(static_cast<int>(state.range(1)));
  const auto a = random_dense(n, n, 1), b = random_dense(n, 8, 2);
  for (auto _ : state) benchmark::DoNotOptimize(mtf::matmul(a, b));
}

void BM_SparseMatmulReference(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_sparse(n, n, 0.05, 3);
  const auto b = random_dense(n, 8, 4);
  for (auto _ : state) benchmark::DoNotOptimize(mtf::reference::matmul(a, b));
}

void BM_SparseMatmulParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  mtf::parallel::set_thread_count(static_cast<int>(state.range(1)));
  const auto a = random_sparse(n, n, 0.05, 3);
  const auto b = random_dense(n, 8, 4);
  for (auto _ : state) benchmark::DoNotOptimize(mtf::matmul(a, b));
}

void BM_CosineReference(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_dense(n, 64, 5);
  for (auto _ : state) benchmark::DoNotOptimize(mtf::reference::cosine_similarity(x));
}

void BM_KnnGraphParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  mtf::parallel::set_thread_count(static_cast<int>(state.range(1)));
  const auto x = random_dense(n, 64, 5);
  for (auto _ : state) benchmark::DoNotOptimize(mtf::build_intra_knn(x, 5));
}

void BM_SolverIteration(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  mtf::parallel::set_thread_count(static_cast<int>(state.range(1)));
  mtf::SyntheticSpec spec{{n, n, n}, 4, 1.0, 0.1, 0.5, 7};
  const auto dataset = mtf::generate_synthetic(spec);
  mtf::SolverConfig config;
  config.clusters = 4;
  config.lambda = 10.0;
  config.delta = 1.0;
  config.max_iters = 1;
  config.rel_tol = 1e-300;
  const auto graphs = mtf::build_graphs(dataset, config.k, config.p, config.lambda, config.delta);
  const auto initial = mtf::init_factors(dataset, config);
  for (auto _ : state) benchmark::DoNotOptimize(mtf::solve_from(dataset, config, graphs, initial));
}

}  // namespace

BENCHMARK(BM_DenseMatmulReference)->Arg(256)->Arg(512);
BENCHMARK(BM_DenseMatmulParallel)->Args({256, 1})->Args({256, 4})->Args({512, 1})->Args({512, 4});
BENCHMARK(BM_SparseMatmulReference)->Arg(1000)->Arg(4000);
BENCHMARK(BM_SparseMatmulParallel)->Args({1000, 1})->Args({1000, 4})->Args({4000, 1})->Args({4000, 4});
BENCHMARK(BM_CosineReference)->Arg(400)->Arg(800);
BENCHMARK(BM_KnnGraphParallel)->Args({400, 1})->Args({400, 4})->Args({800, 1})->Args({800, 4});
BENCHMARK(BM_SolverIteration)->Args({200, 1})->Args({200, 4});

BENCHMARK_MAIN();
