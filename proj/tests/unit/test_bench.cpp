#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "caseidx/bench.hpp"
#include "caseidx/error.hpp"
#include "caseidx/synthetic.hpp"
#include "test_support.hpp"

using namespace caseidx;

namespace {

BenchSpec small_spec() {
  BenchSpec s;
  s.sizes = {300, 900};
  s.n_shards = 4;
  s.max_entries = 8;
  s.k_values = {5, 40};
  s.radius_min = 0.5;
  s.radius_max = 8.0;
  s.radius_steps = 3;
  s.queries = 5;
  s.accuracy_size = 600;
  s.accuracy_k = 50;
  return s;
}

}  // namespace

TEST(Synthetic, DeterministicAndInBounds) {
  SyntheticSpec s;
  s.count = 2000;
  s.seed = 4;
  s.distribution = SpatialDistribution::kClustered;
  auto a = generate_records(s);
  auto b = generate_records(s);
  ASSERT_EQ(a.size(), 2000u);
  EXPECT_EQ(a, b);
  std::set<RecordId> ids;
  for (const auto& r : a) {
    ids.insert(r.record_id);
    EXPECT_GE(r.position[0], 18.0);
    EXPECT_LE(r.position[0], 54.0);
    EXPECT_GE(r.position[1], 73.0);
    EXPECT_LE(r.position[1], 135.0);
  }
  EXPECT_EQ(ids.size(), a.size());
  s.seed = 5;
  EXPECT_NE(generate_records(s), a);
}

TEST(Synthetic, ClusteredDataHasRepeatedPositions) {
  SyntheticSpec s;
  s.count = 5000;
  s.distribution = SpatialDistribution::kClustered;
  std::set<std::pair<double, double>> seen;
  for (const auto& r : generate_records(s)) seen.insert({r.position[0], r.position[1]});
  EXPECT_LT(seen.size(), 5000u);
  EXPECT_EQ(parse_distribution("uniform"), SpatialDistribution::kUniform);
  EXPECT_THROW(parse_distribution("gaussian"), UsageError);
}

TEST(BenchSpec, RadiiAreGeometric) {
  BenchSpec s;
  s.radius_min = 1.0;
  s.radius_max = 16.0;
  s.radius_steps = 5;
  auto r = s.radii();
  ASSERT_EQ(r.size(), 5u);
  for (std::size_t i = 0; i < r.size(); ++i) EXPECT_NEAR(r[i], std::pow(2.0, i), 1e-12);
  s.radius_steps = 1;
  EXPECT_EQ(s.radii(), (std::vector<double>{1.0}));
}

TEST(BenchSpec, RejectsNonsense) {
  auto s = small_spec();
  EXPECT_NO_THROW(s.validate());
  s.n_shards = 0;
  EXPECT_THROW(s.validate(), UsageError);
  s = small_spec();
  s.radius_min = 10.0;
  s.radius_max = 1.0;
  EXPECT_THROW(s.validate(), UsageError);
  s = small_spec();
  s.experiments = {"exp9_unknown"};
  EXPECT_THROW(s.validate(), UsageError);
  s = small_spec();
  s.repetitions = 0;
  EXPECT_THROW(s.validate(), UsageError);
}

TEST(RunBench, SmallSpecProducesEveryExperiment) {
  const auto rows = run_bench(small_spec());
  std::map<std::string, std::size_t> count;
  for (const auto& r : rows) ++count[r.experiment];
  EXPECT_EQ(count[kExpIndex], 2u);
  EXPECT_EQ(count[kExpKnn], 4u);
  EXPECT_EQ(count[kExpRange], 6u);
  EXPECT_EQ(count[kExpSpace], 2u);
  EXPECT_EQ(count[kExpAccuracy], 1u);
  for (const auto& r : rows) {
    EXPECT_GE(r.elapsed_seconds, 0.0);
    EXPECT_EQ(r.n_shards, 4u);
    if (r.experiment == kExpAccuracy) {
      ASSERT_TRUE(r.accuracy);
      EXPECT_DOUBLE_EQ(*r.accuracy, 1.0);
    }
    if (r.experiment == kExpSpace) {
      ASSERT_TRUE(r.space_bytes);
      EXPECT_GT(*r.space_bytes, 0u);
    }
    if (r.experiment == kExpKnn || r.experiment == kExpRange) {
      // The warm pass repeats the batch, so half of all queries hit.
      EXPECT_EQ(r.cache_hits, r.queries / 2);
      EXPECT_EQ(r.cache_misses, r.queries / 2);
    }
  }
}

TEST(RunBench, TenThousandRecordsAllExperiments) {
  BenchSpec s;
  s.sizes = {10000};
  s.accuracy_size = 10000;
  const auto rows = run_bench(s);
  std::set<std::string> seen;
  for (const auto& r : rows) {
    seen.insert(r.experiment);
    if (r.accuracy) {
      EXPECT_EQ(*r.accuracy, 1.0);
    }
  }
  EXPECT_EQ(seen.size(), 5u);
  std::stringstream ss;
  write_metrics(ss, rows);
  EXPECT_EQ(read_metrics(ss).size(), rows.size());
}

TEST(RunBench, SpaceBarelyDependsOnShardCount) {
  auto s = small_spec();
  s.sizes = {20000};
  s.experiments = {kExpSpace};
  s.max_entries = 64;
  s.n_shards = 5;
  const auto five = *run_bench(s).at(0).space_bytes;
  s.n_shards = 25;
  const auto twenty_five = *run_bench(s).at(0).space_bytes;
  const double ratio = static_cast<double>(twenty_five) / static_cast<double>(five);
  EXPECT_GT(ratio, 1.0 / 1.15);
  EXPECT_LT(ratio, 1.15);
}

TEST(RunBench, SpaceGrowsWithDatasetSize) {
  auto s = small_spec();
  s.experiments = {kExpSpace};
  auto rows = run_bench(s);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_LT(*rows[0].space_bytes, *rows[1].space_bytes);
}

TEST(RunBench, RepetitionsAreNumbered) {
  auto s = small_spec();
  s.experiments = {kExpIndex};
  s.repetitions = 3;
  auto rows = run_bench(s);
  ASSERT_EQ(rows.size(), 6u);
  std::set<std::size_t> runs;
  for (const auto& r : rows) runs.insert(r.run);
  EXPECT_EQ(runs, (std::set<std::size_t>{0, 1, 2}));
}

TEST(RunBench, NonTimingColumnsAreReproducible) {
  auto s = small_spec();
  s.experiments = {kExpKnn, kExpSpace, kExpAccuracy};
  auto a = run_bench(s);
  auto b = run_bench(s);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].experiment, b[i].experiment);
    EXPECT_EQ(a[i].parameter, b[i].parameter);
    EXPECT_EQ(a[i].dataset_size, b[i].dataset_size);
    EXPECT_EQ(a[i].space_bytes, b[i].space_bytes);
    EXPECT_EQ(a[i].accuracy, b[i].accuracy);
    EXPECT_EQ(a[i].cache_hits, b[i].cache_hits);
  }
}

TEST(RunBench, SocketFabricGivesTheSameAccuracy) {
  auto s = small_spec();
  s.experiments = {kExpAccuracy};
  s.fabric = FabricKind::kSocket;
  auto rows = run_bench(s);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_DOUBLE_EQ(*rows[0].accuracy, 1.0);
}

TEST(Metrics, RoundTripThroughCsv) {
  std::vector<MetricsRow> rows(2);
  rows[0] = {kExpKnn, 1, "k", 2500, 14470, 25, 0.125, std::nullopt, std::nullopt, 20, 20, 20};
  rows[1] = {kExpAccuracy, 0, "k", 3000, 10000, 25, 1.5, 123456, 0.875, 0, 20, 20};
  std::stringstream ss;
  write_metrics(ss, rows);
  std::string header;
  std::getline(std::stringstream(ss.str()), header);
  EXPECT_EQ(header, kMetricsHeader);
  auto back = read_metrics(ss);
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].experiment, rows[i].experiment);
    EXPECT_EQ(back[i].run, rows[i].run);
    EXPECT_EQ(back[i].parameter, rows[i].parameter);
    EXPECT_EQ(back[i].elapsed_seconds, rows[i].elapsed_seconds);
    EXPECT_EQ(back[i].space_bytes, rows[i].space_bytes);
    EXPECT_EQ(back[i].accuracy, rows[i].accuracy);
    EXPECT_EQ(back[i].queries, rows[i].queries);
  }
  std::stringstream bad("experiment,run\nx,1\n");
  EXPECT_THROW(read_metrics(bad), UsageError);
}
