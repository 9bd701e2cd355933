#include <benchmark/benchmark.h>

#include "fedfence/secure_agg.hpp"

namespace {

using namespace fedfence;

struct Scene {
  ShardPlan plan;
  MaskTable table;
  std::vector<RealVector> updates;
  FixedPointParams params;
  ServerTranscript transcript;
};

Scene make_scene(std::size_t n, std::size_t p, std::size_t d) {
  SeededRng rng(7);
  SeededRng part = rng.derive({stream::kPartition});
  SeededRng masks = rng.derive({stream::kMasks});
  SeededRng data = rng.derive({stream::kClientData});
  Scene s;
  s.plan = partition_shards(n, p, part);
  s.table = generate_masks(s.plan, d, masks);
  s.updates.assign(n, RealVector(d));
  for (auto& u : s.updates)
    for (auto& x : u) x = data.next_gaussian();
  s.transcript.n = n;
  s.transcript.d = d;
  s.transcript.plan = s.plan;
  s.transcript.masked.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    s.transcript.masked[i] =
        mask_update(s.updates[i], static_cast<ClientId>(i), s.table, s.params);
  return s;
}

void BM_GenerateMasks(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  SeededRng rng(7);
  SeededRng part = rng.derive({stream::kPartition});
  const ShardPlan plan = partition_shards(100, 25, part);
  for (auto _ : state) {
    SeededRng masks = rng.derive({stream::kMasks});
    benchmark::DoNotOptimize(generate_masks(plan, d, masks));
  }
}
BENCHMARK(BM_GenerateMasks)->Arg(1024)->Arg(4096);

void BM_MaskUpdate(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const Scene s = make_scene(100, 25, d);
  for (auto _ : state)
    benchmark::DoNotOptimize(mask_update(s.updates[0], 0, s.table, s.params));
}
BENCHMARK(BM_MaskUpdate)->Arg(1024)->Arg(4096);

void BM_AggregateAllShards(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const Scene s = make_scene(100, 25, d);
  for (auto _ : state)
    benchmark::DoNotOptimize(aggregate_all_shards(s.transcript, s.params));
}
BENCHMARK(BM_AggregateAllShards)->Arg(1024)->Arg(4096);

}  // namespace
