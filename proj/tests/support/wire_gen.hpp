#pragma once

#include <random>
#include <string>

#include "caseidx/wire.hpp"
#include "test_support.hpp"

// Random envelopes covering every message tag, for round-trip and fuzz runs.
namespace caseidx::testing {

inline Point rand_point(std::mt19937_64& rng) {
  const std::size_t d = 1 + rng() % 4;
  return random_point(rng, d, -1e6, 1e6);
}

inline std::string rand_text(std::mt19937_64& rng, std::size_t max) {
  std::string s(rng() % (max + 1), '\0');
  for (auto& c : s) c = static_cast<char>(rng() % 256);
  return s;
}

inline Query rand_query(std::mt19937_64& rng) {
  if (rng() % 2) return KnnQuery{rand_point(rng), rng()};
  return RangeQuery{rand_point(rng), std::uniform_real_distribution<double>(0, 1e9)(rng)};
}

inline wire::PartialResult rand_partial(std::mt19937_64& rng) {
  wire::PartialResult p;
  const std::size_t n = rng() % 20;
  if (rng() % 2) {
    p.kind = QueryKind::kKnn;
    for (std::size_t i = 0; i < n; ++i) {
      p.neighbors.push_back({rng(), std::uniform_real_distribution<double>(0, 1e3)(rng)});
    }
  } else {
    p.kind = QueryKind::kRange;
    for (std::size_t i = 0; i < n; ++i) p.ids.push_back(rng());
  }
  return p;
}

inline wire::Message rand_message(std::mt19937_64& rng) {
  switch (rng() % 8) {
    case 0:
      return wire::QuerySubmit{rand_query(rng)};
    case 1:
      return wire::QueryAck{rng()};
    case 2:
      return wire::ShardQuery{rng(), rand_query(rng)};
    case 3:
      return wire::ShardResult{rng(), static_cast<NodeId>(rng()), rand_partial(rng)};
    case 4: {
      wire::PartialResult p = rand_partial(rng);
      QueryResult r;
      r.query_id = rng();
      r.kind = p.kind;
      r.neighbors = p.neighbors;
      r.ids = p.ids;
      r.from_cache = rng() % 2;
      r.shard_count = static_cast<std::uint32_t>(rng());
      r.degraded = rng() % 2;
      for (std::size_t i = rng() % 4; i > 0; --i) r.missing_nodes.push_back(static_cast<NodeId>(rng()));
      r.duplicates_removed = rng();
      return wire::QueryComplete{r};
    }
    case 5: {
      CaseRecord rec;
      rec.record_id = rng();
      rec.position = rand_point(rng);
      rec.status = static_cast<CaseStatus>(rng() % 5);
      if (rng() % 2) rec.event_day = static_cast<std::int32_t>(rng());
      for (std::size_t i = rng() % 4; i > 0; --i) {
        rec.attributes.emplace_back(rand_text(rng, 10), rand_text(rng, 30));
      }
      return wire::InsertRecord{rec};
    }
    case 6:
      return wire::InsertAck{static_cast<NodeId>(rng())};
    default:
      return wire::ErrorMessage{static_cast<std::uint16_t>(rng()), rand_text(rng, 40)};
  }
}

inline wire::Envelope rand_envelope(std::mt19937_64& rng) {
  wire::Envelope e;
  e.message_id = rng();
  e.correlation_id = rng();
  e.sender = rand_text(rng, 12);
  e.payload = rand_message(rng);
  return e;
}

}  // namespace caseidx::testing
