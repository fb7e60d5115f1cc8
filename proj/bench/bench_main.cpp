#include "binpick/config.hpp"
#include "binpick/grasp.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <omp.h>

using namespace binpick;

namespace {

/// Square dome patch with n x n lattice points.
std::vector<Vec3> dome_patch(int n) {
  std::vector<Vec3> pts;
  const double pitch = 0.005, r = 0.6 * n * pitch;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double x = (i - n / 2) * pitch, y = (j - n / 2) * pitch;
      pts.emplace_back(0.2 + x, 0.2 + y, 0.1 + std::sqrt(std::max(0.0, r * r - x * x - y * y)));
    }
  return pts;
}

Container tote() { return default_layout().front(); }

void BM_ScoreSerial(benchmark::State& state) {
  const auto pts = dome_patch(static_cast<int>(state.range(0)));
  Container c = tote();
  c.origin = Vec3(0, 0, 0);
  for (auto _ : state) benchmark::DoNotOptimize(score_candidates_serial(pts, c, GraspScoringParams{}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pts.size()));
}

void BM_ScoreParallel(benchmark::State& state) {
  const auto pts = dome_patch(static_cast<int>(state.range(0)));
  Container c = tote();
  c.origin = Vec3(0, 0, 0);
  for (auto _ : state) benchmark::DoNotOptimize(score_candidates(pts, c, GraspScoringParams{}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pts.size()));
  state.counters["threads"] = omp_get_max_threads();
}

void BM_FinalsRun(benchmark::State& state) {
  static const Config cfg = load_config(std::filesystem::path(BINPICK_CONFIG_DIR) / "default.json");
  std::uint64_t seed = 1;
  for (auto _ : state) {
    const TaskSpec spec = make_task(Phase::Finals, *cfg.catalog, cfg.tasks, seed);
    benchmark::DoNotOptimize(run_task(spec, cfg.catalog, cfg.params, seed++));
  }
}

void BM_Corpus(benchmark::State& state) {
  static const Config cfg = load_config(std::filesystem::path(BINPICK_CONFIG_DIR) / "default.json");
  const auto scenes = read_corpus(std::filesystem::path(BINPICK_CONFIG_DIR) / "perception_corpus.ndjson");
  for (auto _ : state)
    benchmark::DoNotOptimize(evaluate_corpus(scenes, cfg.catalog, cfg.params.perception, cfg.params.world));
}

}  // namespace

BENCHMARK(BM_ScoreSerial)->Arg(10)->Arg(22)->Arg(40)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ScoreParallel)->Arg(10)->Arg(22)->Arg(40)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_FinalsRun)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Corpus)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
