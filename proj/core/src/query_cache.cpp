#include "caseidx/query_cache.hpp"

#include <bit>

namespace caseidx {

namespace {

void append_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

}  // namespace

std::string cache_key(const Query& q) {
  std::string key;
  const Point& c = query_center(q);
  key.push_back(is_knn(q) ? 'k' : 'r');
  key.push_back(static_cast<char>(c.dimension()));
  for (std::size_t i = 0; i < c.dimension(); ++i) append_u64(key, std::bit_cast<std::uint64_t>(c[i]));
  if (const auto* knn = std::get_if<KnnQuery>(&q)) {
    append_u64(key, knn->k);
  } else {
    append_u64(key, std::bit_cast<std::uint64_t>(std::get<RangeQuery>(q).radius));
  }
  return key;
}

QueryCache::QueryCache(std::size_t capacity) : capacity_(capacity) {}

std::optional<QueryResult> QueryCache::lookup(const Query& q) {
  const std::string key = cache_key(q);
  std::lock_guard lock(mu_);
  auto it = index_.find(key);
  if (it == index_.end()) {
    ++stats_.misses;
    return std::nullopt;
  }
  ++stats_.hits;
  lru_.splice(lru_.begin(), lru_, it->second);
  QueryResult out = it->second->second;
  out.from_cache = true;
  return out;
}

void QueryCache::insert(const Query& q, const QueryResult& result) {
  if (capacity_ == 0) return;
  std::string key = cache_key(q);
  std::lock_guard lock(mu_);
  if (auto it = index_.find(key); it != index_.end()) {
    it->second->second = result;
    lru_.splice(lru_.begin(), lru_, it->second);
    return;
  }
  while (lru_.size() >= capacity_) {
    index_.erase(lru_.back().first);
    lru_.pop_back();
    ++stats_.evictions;
  }
  lru_.emplace_front(key, result);
  index_.emplace(std::move(key), lru_.begin());
}

void QueryCache::invalidate_all() {
  std::lock_guard lock(mu_);
  lru_.clear();
  index_.clear();
  ++stats_.invalidations;
}

CacheStats QueryCache::stats() const {
  std::lock_guard lock(mu_);
  CacheStats s = stats_;
  s.size = lru_.size();
  return s;
}

}  // namespace caseidx
