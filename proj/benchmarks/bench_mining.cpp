#include <benchmark/benchmark.h>

#include "ppmine/calibration.hpp"
#include "ppmine/rng.hpp"
#include "ppmine/schedule.hpp"
#include "ppmine/scoring.hpp"

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

static void BM_score_candidates_union(benchmark::State& state) {
  const auto src = bench_store(std::size_t(state.range(0)), 64, 3);
  const auto tgt = bench_store(std::size_t(state.range(0)), 64, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        score_candidates(src, tgt, 4, CandidateStrategy::forward_backward_union));
  }
}
BENCHMARK(BM_score_candidates_union)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);

static void BM_score_candidates_exhaustive(benchmark::State& state) {
  const auto src = bench_store(std::size_t(state.range(0)), 64, 3);
  const auto tgt = bench_store(std::size_t(state.range(0)), 64, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        score_candidates(src, tgt, 4, CandidateStrategy::exhaustive));
  }
}
BENCHMARK(BM_score_candidates_exhaustive)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_calibrate_threshold(benchmark::State& state) {
  Rng rng(5);
  std::vector<ScoredPair> scored;
  std::vector<IdPair> gold_pairs;
  for (std::int64_t i = 0; i < state.range(0); ++i) {
    scored.push_back({SentenceId(i), SentenceId(i), 1.0 + rng.unit() * 0.2});
    if (rng.below(4) == 0) gold_pairs.emplace_back(SentenceId(i), SentenceId(i));
  }
  const auto gold = GoldPairSet::from_pairs(gold_pairs);
  for (auto _ : state) {
    benchmark::DoNotOptimize(calibrate_threshold(scored, gold, GridSpec::observed()));
  }
}
BENCHMARK(BM_calibrate_threshold)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

static void BM_schedule_step(benchmark::State& state) {
  CipherTaskParams params;
  params.vocab_size = 50;
  params.n_sentences = 500;
  const auto task = make_cipher_task(params, 1);
  SchedulePlan plan;
  plan.mode = ScheduleMode::ibt_pseudo_par;
  plan.max_steps = std::uint64_t(state.range(0));
  plan.eval_every = plan.max_steps;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        run_schedule(plan, task.mono_src, task.mono_tgt, task.pp, task.valid, 1));
  }
}
BENCHMARK(BM_schedule_step)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);
