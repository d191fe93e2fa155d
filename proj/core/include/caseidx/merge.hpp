#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "caseidx/record.hpp"

namespace caseidx {

/// Smallest min(k, total) neighbors across sorted partials under
/// (distance, record_id). Throws InvariantError if a partial is unsorted.
std::vector<Neighbor> merge_knn(std::span<const std::vector<Neighbor>> partials, std::size_t k);

struct RangeMerge {
  std::vector<RecordId> ids;
  std::uint64_t duplicates_removed = 0;
};

/// Sorted union of ascending id lists. Duplicates are dropped and counted.
/// Throws InvariantError if a partial is not ascending.
RangeMerge merge_range(std::span<const std::vector<RecordId>> partials);

}  // namespace caseidx
