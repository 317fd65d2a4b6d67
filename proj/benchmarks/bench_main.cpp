#include <benchmark/benchmark.h>

#include <cstdint>

#include "bbm/rng.hpp"
#include "bbm/sampling.hpp"
#include "bbm/simulation.hpp"
#include "bbm/statistics.hpp"

namespace {

bbm::SimConfig config(double horizon, bool retain) {
  bbm::SimConfig cfg;
  cfg.horizon = horizon;
  cfg.snapshot_times = {horizon / 2.0, horizon};
  cfg.retain_genealogy = retain;
  return cfg;
}

// Items processed = particles created, so the rate reads as particles/s.
void BM_Simulate(benchmark::State& state) {
  const bbm::SimConfig cfg = config(static_cast<double>(state.range(0)), state.range(1) != 0);
  std::uint64_t stream = 0;
  std::int64_t particles = 0;
  for (auto _ : state) {
    bbm::RngStream rng(1, stream++);
    const bbm::Realization real = bbm::simulate(cfg, rng);
    particles += static_cast<std::int64_t>(real.particle_count());
    benchmark::DoNotOptimize(real.snapshots().data());
  }
  state.SetItemsProcessed(particles);
}
BENCHMARK(BM_Simulate)->Args({6, 1})->Args({6, 0})->Args({8, 1})->Args({8, 0});

void BM_RngNext(benchmark::State& state) {
  bbm::RngStream rng(1, 0);
  for (auto _ : state) benchmark::DoNotOptimize(rng());
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_RngNext);

void BM_Offspring(benchmark::State& state) {
  bbm::RngStream rng(1, 0);
  const auto dist = bbm::OffspringDistribution::binary();
  for (auto _ : state) benchmark::DoNotOptimize(bbm::sample_offspring(dist, rng));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Offspring);

void BM_StableKanter(benchmark::State& state) {
  bbm::RngStream rng(1, 0);
  const bbm::StableSpec spec{0.7};
  for (auto _ : state) benchmark::DoNotOptimize(bbm::sample_stable_positive(spec, rng));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_StableKanter);

void BM_StableSeries(benchmark::State& state) {
  bbm::RngStream rng(1, 0);
  const bbm::StableSpec spec{0.7};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        bbm::sample_stable_positive(spec, rng, bbm::StableMethod::kPoissonSeries));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_StableSeries);

void BM_AdditiveMartingale(benchmark::State& state) {
  bbm::RngStream rng(1, 0);
  const bbm::Realization real = bbm::simulate(config(8.0, false), rng);
  const bbm::Snapshot& snap = real.snapshots().back();
  for (auto _ : state) benchmark::DoNotOptimize(bbm::stats::additive_martingale(snap, 0.5));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(snap.entries.size()));
}
BENCHMARK(BM_AdditiveMartingale);

void BM_OverlapMass(benchmark::State& state) {
  bbm::RngStream rng(1, 0);
  const double t = static_cast<double>(state.range(0));
  bbm::SimConfig cfg = config(t, true);
  cfg.snapshot_times = {t / 2.0, t};
  const bbm::Realization real = bbm::simulate(cfg, rng);
  for (auto _ : state) benchmark::DoNotOptimize(bbm::stats::overlap_mass(real, 0.5, t, 0.5));
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(real.snapshots().back().entries.size()));
}
BENCHMARK(BM_OverlapMass)->Arg(6)->Arg(8);

}  // namespace

BENCHMARK_MAIN();
