#pragma once

#include <cstdint>
#include <vector>

#include "caseidx/record.hpp"
#include "caseidx/rplus_tree.hpp"

namespace caseidx {

/// Brute-force reference index. Answers every query by scanning all records,
/// under the same (distance, record_id) ordering as the tree.
class LinearScan {
 public:
  LinearScan() = default;
  explicit LinearScan(std::vector<LeafEntry> entries) : entries_(std::move(entries)) {}

  void add(RecordId id, const Point& p) { entries_.push_back({id, p}); }
  std::size_t size() const noexcept { return entries_.size(); }

  std::vector<Neighbor> knn(const Point& center, std::uint64_t k) const;
  std::vector<RecordId> range(const Point& center, double radius) const;

 private:
  std::vector<LeafEntry> entries_;
};

}  // namespace caseidx
