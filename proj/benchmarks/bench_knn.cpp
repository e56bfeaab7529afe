#include <benchmark/benchmark.h>

#include "ppmine/knn.hpp"
#include "ppmine/rng.hpp"

using namespace ppmine;

namespace {

EmbeddingStore bench_store(std::size_t rows, std::uint32_t dim, std::uint64_t seed) {
  Rng rng(seed);
  FloatMatrix m;
  m.dim = dim;
  m.data.resize(rows * dim);
  for (auto& x : m.data) x = float(rng.gaussian());
  return EmbeddingStore::from_raw("b", m);
}

}  // namespace

static void BM_knn_exact(benchmark::State& state) {
  const auto queries = bench_store(std::size_t(state.range(0)), 64, 1);
  const auto index = bench_store(std::size_t(state.range(1)), 64, 2);
  SearchParams params;
  params.k = 4;
  for (auto _ : state) {
    benchmark::DoNotOptimize(knn_exact(queries, index, params));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}
BENCHMARK(BM_knn_exact)->Args({512, 2048})->Args({1024, 8192})->Unit(benchmark::kMillisecond);

static void BM_knn_oracle(benchmark::State& state) {
  const auto queries = bench_store(std::size_t(state.range(0)), 64, 1);
  const auto index = bench_store(std::size_t(state.range(1)), 64, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(knn_oracle(queries, index, 4));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}
BENCHMARK(BM_knn_oracle)->Args({512, 2048})->Unit(benchmark::kMillisecond);

// tile-size sweep for the blocked kernel; the defaults are a starting point
static void BM_knn_block_size(benchmark::State& state) {
  const auto queries = bench_store(1024, 64, 1);
  const auto index = bench_store(8192, 64, 2);
  SearchParams params;
  params.k = 4;
  params.query_block = std::size_t(state.range(0));
  params.index_block = std::size_t(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(knn_exact(queries, index, params));
  }
}
BENCHMARK(BM_knn_block_size)
    ->Args({256, 1024})
    ->Args({1024, 4096})
    ->Args({4096, 8192})
    ->Unit(benchmark::kMillisecond);

static void BM_knn_threads(benchmark::State& state) {
  const auto queries = bench_store(2048, 64, 1);
  const auto index = bench_store(8192, 64, 2);
  SearchParams params;
  params.k = 4;
  params.query_block = 256;
  params.threads = unsigned(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(knn_exact(queries, index, params));
  }
}
BENCHMARK(BM_knn_threads)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
