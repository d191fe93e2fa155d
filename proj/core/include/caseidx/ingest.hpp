#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "caseidx/error.hpp"
#include "caseidx/kv_config.hpp"
#include "caseidx/record.hpp"
#include "caseidx/rplus_tree.hpp"

namespace caseidx {

/// How CSV columns map onto CaseRecord fields.
///
/// Config-file keys (all optional except coord_columns):
///   id_column          column name, or "synthesize" for sequential ids
///   coord_columns      comma list, one name per index dimension
///   status_column      column holding the case status
///   status_map         comma list of raw:status pairs, e.g. "died:dead"
///   date_column        column holding the event date
///   date_format        strptime-style format, default %d.%m.%Y
///   epoch              YYYY-MM-DD, day 0 of event_day, default 2019-12-01
///   day_coordinate     true to append event_day (scaled) as a coordinate
///   day_scale          multiplier applied to event_day when it is a coordinate
///   attribute_columns  comma list of columns copied into attributes
struct ColumnMapping {
  static constexpr const char* kSynthesize = "synthesize";

  std::string id_column = kSynthesize;
  std::vector<std::string> coord_columns{"latitude", "longitude"};
  std::optional<std::string> status_column;
  std::map<std::string, CaseStatus> status_map;
  std::optional<std::string> date_column;
  std::string date_format = "%d.%m.%Y";
  std::string epoch = "2019-12-01";
  bool day_coordinate = false;
  double day_scale = 1.0;
  std::vector<std::string> attribute_columns;

  static ColumnMapping from_config(const KvConfig& config);

  /// Throws UsageError when names repeat or the dimension is out of range.
  void validate() const;

  std::size_t dimension() const noexcept { return coord_columns.size() + (day_coordinate ? 1 : 0); }
};

struct Rejection {
  std::size_t line = 0;
  std::string reason;

  friend bool operator==(const Rejection&, const Rejection&) = default;
};

struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t rows_accepted = 0;
  std::size_t rows_rejected = 0;
  std::vector<Rejection> rejections;
  double duration_seconds = 0.0;
};

struct ParsedCsv {
  std::vector<CaseRecord> records;
  IngestReport report;
};

/// Day offset of a calendar date from the epoch (YYYY-MM-DD).
std::optional<std::int32_t> parse_day(const std::string& text, const std::string& format,
                                      const std::string& epoch);

/// Parses a CSV with a header row. Bad rows are rejected with a reason, never
/// dropped silently. Throws UsageError naming a mapped column the header
/// lacks and IoError when the file cannot be read.
ParsedCsv parse_csv(const std::filesystem::path& path, const ColumnMapping& mapping);
ParsedCsv parse_csv_stream(std::istream& in, const ColumnMapping& mapping);

enum class PartitionStrategy { kChunk, kSpatial };

std::string_view to_string(PartitionStrategy s) noexcept;
PartitionStrategy parse_strategy(std::string_view text);

struct Partition {
  std::size_t partition_id = 0;
  std::vector<CaseRecord> records;
};

/// Default shard count.
inline constexpr std::size_t kDefaultShards = 25;

/// Splits records into n_shards disjoint partitions. "chunk" keeps input order
/// in contiguous blocks whose sizes differ by at most one (larger blocks
/// first); "spatial" groups records into sort-tile-recursive tiles.
std::vector<Partition> partition(std::vector<CaseRecord> records, std::size_t n_shards,
                                 PartitionStrategy strategy = PartitionStrategy::kChunk);

class PartitionError : public Error {
 public:
  PartitionError(std::size_t partition_id, const std::string& what)
      : Error("partition " + std::to_string(partition_id) + ": " + what),
        partition_id_(partition_id) {}

  std::size_t partition_id() const noexcept { return partition_id_; }

 private:
  std::size_t partition_id_;
};

/// Bulk-loads one tree per partition, in partition order. With parallel set
/// the partitions are indexed on worker threads; the output is identical.
std::vector<RPlusTree> build_shards(std::span<const Partition> partitions,
                                    const TreeConfig& config, bool parallel);

std::filesystem::path shard_file_name(std::size_t shard_id);

/// Writes shard-<id>.idx for each tree into dir.
std::vector<std::filesystem::path> write_shards(std::span<const RPlusTree> trees,
                                                const std::filesystem::path& dir);

}  // namespace caseidx
