#pragma once

#include <cstddef>
#include <cstdint>
#include <list>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "caseidx/record.hpp"

namespace caseidx {

/// Canonical cache key: kind, dimension, the exact bits of every center
/// coordinate and of k or the radius. Queries that differ in any bit miss.
std::string cache_key(const Query& q);

struct CacheStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t evictions = 0;
  std::uint64_t invalidations = 0;
  std::size_t size = 0;
};

/// Thread-safe LRU map from canonical query key to completed result.
class QueryCache {
 public:
  static constexpr std::size_t kDefaultCapacity = 1024;

  explicit QueryCache(std::size_t capacity = kDefaultCapacity);

  /// On a hit the stored result is returned with from_cache set and the
  /// entry becomes most recently used.
  std::optional<QueryResult> lookup(const Query& q);

  /// Stores a result under q. A capacity of zero disables caching.
  void insert(const Query& q, const QueryResult& result);

  void invalidate_all();

  CacheStats stats() const;
  std::size_t capacity() const noexcept { return capacity_; }

 private:
  using Entry = std::pair<std::string, QueryResult>;

  std::size_t capacity_;
  mutable std::mutex mu_;
  std::list<Entry> lru_;  // front is most recent
  std::unordered_map<std::string, std::list<Entry>::iterator> index_;
  CacheStats stats_;
};

}  // namespace caseidx
