#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "caseidx/cluster.hpp"
#include "caseidx/ingest.hpp"
#include "caseidx/synthetic.hpp"

namespace caseidx {

inline constexpr const char* kExpIndex = "exp1_index";
inline constexpr const char* kExpKnn = "exp2_knn";
inline constexpr const char* kExpRange = "exp3_range";
inline constexpr const char* kExpSpace = "exp4_space";
inline constexpr const char* kExpAccuracy = "exp5_accuracy";

struct BenchSpec {
  /// Synthetic dataset sizes; ignored when dataset is set.
  std::vector<std::size_t> sizes{229, 1501, 14470};
  /// A CSV dataset to use instead of synthetic data.
  std::optional<std::filesystem::path> dataset;
  std::optional<ColumnMapping> mapping;
  SpatialDistribution distribution = SpatialDistribution::kClustered;
  std::uint64_t seed = 1;
  std::size_t n_shards = kDefaultShards;
  PartitionStrategy strategy = PartitionStrategy::kChunk;
  std::size_t max_entries = 64;
  std::vector<std::uint64_t> k_values{1000, 2000, 2500, 4000};
  double radius_min = 0.1;
  double radius_max = 50.0;
  std::size_t radius_steps = 8;
  std::size_t repetitions = 1;
  /// Distinct query centres per parameter value.
  std::size_t queries = 20;
  std::size_t accuracy_size = 10000;
  std::uint64_t accuracy_k = 3000;
  std::vector<std::string> experiments{kExpIndex, kExpKnn, kExpRange, kExpSpace, kExpAccuracy};
  FabricKind fabric = FabricKind::kInProcess;

  /// Throws UsageError.
  void validate() const;
  /// min..max in radius_steps geometric steps, endpoints included.
  std::vector<double> radii() const;
};

struct MetricsRow {
  std::string experiment;
  std::size_t run = 0;
  std::string parameter_name;
  double parameter = 0.0;
  std::size_t dataset_size = 0;
  std::size_t n_shards = 0;
  double elapsed_seconds = 0.0;
  std::optional<std::size_t> space_bytes;
  std::optional<double> accuracy;
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_misses = 0;
  std::size_t queries = 0;
};

inline constexpr const char* kMetricsHeader =
    "experiment,run,parameter_name,parameter,dataset_size,n_shards,elapsed_seconds,"
    "space_bytes,accuracy,cache_hits,cache_misses,queries";

/// Runs the selected experiments. Progress lines go to log when given.
///
/// Knn and range experiments issue each query batch twice; the second pass
/// is answered from the cache. elapsed_seconds covers the first pass only.
/// Accuracy is |answer ∩ oracle| / |oracle| against a linear scan, averaged
/// over the batch.
std::vector<MetricsRow> run_bench(const BenchSpec& spec, std::ostream* log = nullptr);

void write_metrics(std::ostream& out, const std::vector<MetricsRow>& rows);
void write_metrics(const std::filesystem::path& path, const std::vector<MetricsRow>& rows);

/// Parses a file produced by write_metrics. Throws UsageError on a header or
/// field mismatch.
std::vector<MetricsRow> read_metrics(std::istream& in);

}  // namespace caseidx
