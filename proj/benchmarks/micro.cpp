#include <benchmark/benchmark.h>

#include <random>

#include "caseidx/cluster.hpp"
#include "caseidx/ingest.hpp"
#include "caseidx/linear_scan.hpp"
#include "caseidx/rplus_tree.hpp"
#include "caseidx/synthetic.hpp"
#include "caseidx/wire.hpp"

using namespace caseidx;

namespace {

std::vector<CaseRecord> records(std::size_t n) {
  SyntheticSpec s;
  s.count = n;
  s.distribution = SpatialDistribution::kClustered;
  return generate_records(s);
}

const TreeConfig kConfig = TreeConfig::with_capacity(64);

}  // namespace

static void BM_BulkLoad(benchmark::State& state) {
  const auto recs = records(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(RPlusTree::bulk_load(kConfig, recs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BulkLoad)->Arg(229)->Arg(1501)->Arg(14470)->Arg(100000)->Unit(benchmark::kMillisecond);

static void BM_Insert(benchmark::State& state) {
  const auto recs = records(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    RPlusTree tree(kConfig);
    for (const auto& r : recs) tree.insert(r);
    benchmark::DoNotOptimize(tree.size());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Insert)->Arg(1501)->Arg(14470)->Unit(benchmark::kMillisecond);

static void BM_TreeKnn(benchmark::State& state) {
  const auto recs = records(100000);
  const auto tree = RPlusTree::bulk_load(kConfig, recs);
  const auto centers = generate_centers(recs, 64, 2, 2);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tree.knn_query(centers[i++ % centers.size()],
                                            static_cast<std::uint64_t>(state.range(0))));
  }
}
BENCHMARK(BM_TreeKnn)->Arg(1)->Arg(100)->Arg(1000)->Arg(4000)->Unit(benchmark::kMicrosecond);

static void BM_ScanKnn(benchmark::State& state) {
  const auto recs = records(100000);
  LinearScan scan;
  for (const auto& r : recs) scan.add(r.record_id, r.position);
  const auto centers = generate_centers(recs, 64, 2, 2);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(scan.knn(centers[i++ % centers.size()],
                                      static_cast<std::uint64_t>(state.range(0))));
  }
}
BENCHMARK(BM_ScanKnn)->Arg(1)->Arg(1000)->Unit(benchmark::kMicrosecond);

static void BM_TreeRange(benchmark::State& state) {
  const auto recs = records(100000);
  const auto tree = RPlusTree::bulk_load(kConfig, recs);
  const auto centers = generate_centers(recs, 64, 3, 2);
  const double radius = static_cast<double>(state.range(0)) / 10.0;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tree.range_query(centers[i++ % centers.size()], radius));
  }
}
BENCHMARK(BM_TreeRange)->Arg(1)->Arg(10)->Arg(100)->Unit(benchmark::kMicrosecond);

static void BM_ClusterKnn(benchmark::State& state) {
  const auto recs = records(100000);
  LocalClusterOptions o;
  o.coordinator.replier.cache_capacity = 0;
  LocalCluster cluster(build_shards(partition(recs, static_cast<std::size_t>(state.range(0))),
                                    kConfig, true),
                       o);
  const auto centers = generate_centers(recs, 64, 4, 2);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        cluster.coordinator().query(1, KnnQuery{centers[i++ % centers.size()], 100}));
  }
}
BENCHMARK(BM_ClusterKnn)->Arg(1)->Arg(5)->Arg(25)->Unit(benchmark::kMicrosecond);

static void BM_WireRoundTrip(benchmark::State& state) {
  wire::PartialResult p;
  p.kind = QueryKind::kKnn;
  std::mt19937_64 rng(1);
  for (int i = 0; i < state.range(0); ++i) p.neighbors.push_back({rng(), static_cast<double>(i)});
  const wire::Envelope env{1, 2, "shard-0", wire::ShardResult{7, 0, p}};
  for (auto _ : state) benchmark::DoNotOptimize(wire::decode(wire::encode(env)));
  state.SetBytesProcessed(state.iterations() *
                          static_cast<std::int64_t>(wire::encode(env).size()));
}
BENCHMARK(BM_WireRoundTrip)->Arg(10)->Arg(1000);
BENCHMARK_MAIN();
