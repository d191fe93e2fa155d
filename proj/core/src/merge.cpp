#include "caseidx/merge.hpp"

#include <algorithm>
#include <queue>

#include "caseidx/error.hpp"

namespace caseidx {

std::vector<Neighbor> merge_knn(std::span<const std::vector<Neighbor>> partials, std::size_t k) {
  for (std::size_t i = 0; i < partials.size(); ++i) {
    if (!std::is_sorted(partials[i].begin(), partials[i].end(), neighbor_less)) {
      throw InvariantError("knn partial " + std::to_string(i) + " is not sorted");
    }
  }
  // (partial index, position) heap ordered by the head neighbor.
  using Cursor = std::pair<std::size_t, std::size_t>;
  auto worse = [&](const Cursor& a, const Cursor& b) {
    return neighbor_less(partials[b.first][b.second], partials[a.first][a.second]);
  };
  std::priority_queue<Cursor, std::vector<Cursor>, decltype(worse)> heap(worse);
  for (std::size_t i = 0; i < partials.size(); ++i) {
    if (!partials[i].empty()) heap.emplace(i, 0);
  }
  std::vector<Neighbor> out;
  while (out.size() < k && !heap.empty()) {
    auto [p, pos] = heap.top();
    heap.pop();
    const Neighbor& n = partials[p][pos];
    if (out.empty() || out.back().record_id != n.record_id || out.back().distance != n.distance) {
      out.push_back(n);
    }
    if (pos + 1 < partials[p].size()) heap.emplace(p, pos + 1);
  }
  return out;
}

RangeMerge merge_range(std::span<const std::vector<RecordId>> partials) {
  RangeMerge out;
  std::size_t total = 0;
  for (std::size_t i = 0; i < partials.size(); ++i) {
    if (!std::is_sorted(partials[i].begin(), partials[i].end())) {
      throw InvariantError("range partial " + std::to_string(i) + " is not sorted");
    }
    total += partials[i].size();
  }
  out.ids.reserve(total);
  for (const auto& p : partials) out.ids.insert(out.ids.end(), p.begin(), p.end());
  std::sort(out.ids.begin(), out.ids.end());
  const auto last = std::unique(out.ids.begin(), out.ids.end());
  out.duplicates_removed = static_cast<std::uint64_t>(out.ids.end() - last);
  out.ids.erase(last, out.ids.end());
  return out;
}

}  // namespace caseidx
