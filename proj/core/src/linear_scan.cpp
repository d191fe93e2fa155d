#include "caseidx/linear_scan.hpp"

#include <algorithm>

namespace caseidx {

std::vector<Neighbor> LinearScan::knn(const Point& center, std::uint64_t k) const {
  std::vector<Neighbor> all;
  all.reserve(entries_.size());
  for (const auto& e : entries_) all.push_back({e.id, distance(center, e.position)});
  const std::size_t keep = static_cast<std::size_t>(std::min<std::uint64_t>(k, all.size()));
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                    neighbor_less);
  all.resize(keep);
  return all;
}

std::vector<RecordId> LinearScan::range(const Point& center, double radius) const {
  std::vector<RecordId> out;
  for (const auto& e : entries_) {
    if (distance(center, e.position) <= radius) out.push_back(e.id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace caseidx
