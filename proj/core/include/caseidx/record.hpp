#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "caseidx/geometry.hpp"

namespace caseidx {

using RecordId = std::uint64_t;
using NodeId = std::uint32_t;
using ClientId = std::uint32_t;

enum class CaseStatus : std::uint8_t {
  kConfirmed = 0,
  kSuspected = 1,
  kRecovered = 2,
  kDead = 3,
  kUnknown = 4,
};

std::string_view to_string(CaseStatus s) noexcept;
std::optional<CaseStatus> parse_status(std::string_view text) noexcept;

struct CaseRecord {
  RecordId record_id = 0;
  Point position;
  CaseStatus status = CaseStatus::kUnknown;
  std::optional<std::int32_t> event_day;
  std::vector<std::pair<std::string, std::string>> attributes;

  friend bool operator==(const CaseRecord&, const CaseRecord&) = default;
};

struct KnnQuery {
  Point center;
  std::uint64_t k = 0;
  friend bool operator==(const KnnQuery&, const KnnQuery&) = default;
};

struct RangeQuery {
  Point center;
  double radius = 0.0;
  friend bool operator==(const RangeQuery&, const RangeQuery&) = default;
};

using Query = std::variant<KnnQuery, RangeQuery>;

const Point& query_center(const Query& q) noexcept;
bool is_knn(const Query& q) noexcept;

/// Throws UsageError when the query violates its invariants (negative or
/// non-finite radius, empty center).
void validate_query(const Query& q);

struct Neighbor {
  RecordId record_id = 0;
  double distance = 0.0;
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Ordering used for every KNN answer: distance, then smaller record id.
inline bool neighbor_less(const Neighbor& a, const Neighbor& b) noexcept {
  if (a.distance != b.distance) return a.distance < b.distance;
  return a.record_id < b.record_id;
}

using QueryId = std::uint64_t;

/// Query ids pack the client id in the high 24 bits and a per-client
/// sequence number in the low 40 bits.
inline constexpr unsigned kQuerySequenceBits = 40;
inline constexpr QueryId make_query_id(ClientId client, std::uint64_t seq) noexcept {
  return (static_cast<QueryId>(client) << kQuerySequenceBits) |
         (seq & ((QueryId{1} << kQuerySequenceBits) - 1));
}
inline constexpr ClientId query_client(QueryId id) noexcept {
  return static_cast<ClientId>(id >> kQuerySequenceBits);
}

enum class QueryKind : std::uint8_t { kKnn = 0, kRange = 1 };

struct QueryResult {
  QueryId query_id = 0;
  QueryKind kind = QueryKind::kKnn;
  std::vector<Neighbor> neighbors;  // KNN answers
  std::vector<RecordId> ids;        // range answers
  bool from_cache = false;
  std::uint32_t shard_count = 0;
  bool degraded = false;
  std::vector<NodeId> missing_nodes;
  std::uint64_t duplicates_removed = 0;

  /// Same answer, ignoring delivery metadata (id, cache flag, diagnostics).
  bool same_answer(const QueryResult& other) const noexcept {
    return kind == other.kind && neighbors == other.neighbors && ids == other.ids;
  }

  friend bool operator==(const QueryResult&, const QueryResult&) = default;
};

}  // namespace caseidx
