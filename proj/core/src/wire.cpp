#include "caseidx/wire.hpp"

#include <cmath>
#include <limits>

#include "caseidx/bytes.hpp"

namespace caseidx::wire {

namespace {

using bytes::Order;

constexpr std::size_t kFixedHeaderBytes = 2 + 1 + 1 + 8 + 8 + 2;

// ---- encoding --------------------------------------------------------------

template <typename T>
T checked_width(std::size_t n, const char* what) {
  if (n > std::numeric_limits<T>::max()) {
    throw EncodeError(std::string(what) + " too long for its length field");
  }
  return static_cast<T>(n);
}

void put_point(bytes::Writer& w, const Point& p) {
  w.put(static_cast<std::uint8_t>(p.dimension()));
  for (double c : p.coords()) w.put_f64(c);
}

void put_query(bytes::Writer& w, const Query& q) {
  if (const auto* k = std::get_if<KnnQuery>(&q)) {
    w.put<std::uint8_t>(0);
    put_point(w, k->center);
    w.put<std::uint64_t>(k->k);
  } else {
    const auto& r = std::get<RangeQuery>(q);
    w.put<std::uint8_t>(1);
    put_point(w, r.center);
    w.put_f64(r.radius);
  }
}

void put_hits(bytes::Writer& w, QueryKind kind, const std::vector<Neighbor>& neighbors,
              const std::vector<RecordId>& ids) {
  w.put(static_cast<std::uint8_t>(kind));
  if (kind == QueryKind::kKnn) {
    if (!ids.empty()) throw EncodeError("KNN result carries range ids");
    w.put(checked_width<std::uint32_t>(neighbors.size(), "neighbor list"));
    for (const auto& n : neighbors) {
      w.put<std::uint64_t>(n.record_id);
      w.put_f64(n.distance);
    }
  } else {
    if (!neighbors.empty()) throw EncodeError("range result carries neighbors");
    w.put(checked_width<std::uint32_t>(ids.size(), "id list"));
    for (RecordId id : ids) w.put<std::uint64_t>(id);
  }
}

void put_string16(bytes::Writer& w, const std::string& s, const char* what) {
  w.put(checked_width<std::uint16_t>(s.size(), what));
  w.put_raw(s);
}

void put_string32(bytes::Writer& w, const std::string& s, const char* what) {
  w.put(checked_width<std::uint32_t>(s.size(), what));
  w.put_raw(s);
}

void put_payload(bytes::Writer& w, const Message& m) {
  std::visit(
      [&](const auto& msg) {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, QuerySubmit>) {
          put_query(w, msg.query);
        } else if constexpr (std::is_same_v<T, QueryAck>) {
          w.put<std::uint64_t>(msg.query_id);
        } else if constexpr (std::is_same_v<T, ShardQuery>) {
          w.put<std::uint64_t>(msg.query_id);
          put_query(w, msg.query);
        } else if constexpr (std::is_same_v<T, ShardResult>) {
          w.put<std::uint64_t>(msg.query_id);
          w.put<std::uint32_t>(msg.node_id);
          put_hits(w, msg.partial.kind, msg.partial.neighbors, msg.partial.ids);
        } else if constexpr (std::is_same_v<T, QueryComplete>) {
          const QueryResult& r = msg.result;
          w.put<std::uint64_t>(r.query_id);
          put_hits(w, r.kind, r.neighbors, r.ids);
          w.put<std::uint8_t>(r.from_cache ? 1 : 0);
          w.put<std::uint32_t>(r.shard_count);
          w.put<std::uint8_t>(r.degraded ? 1 : 0);
          w.put(checked_width<std::uint32_t>(r.missing_nodes.size(), "missing list"));
          for (NodeId n : r.missing_nodes) w.put<std::uint32_t>(n);
          w.put<std::uint64_t>(r.duplicates_removed);
        } else if constexpr (std::is_same_v<T, InsertRecord>) {
          const CaseRecord& rec = msg.record;
          w.put<std::uint64_t>(rec.record_id);
          put_point(w, rec.position);
          w.put(static_cast<std::uint8_t>(rec.status));
          w.put<std::uint8_t>(rec.event_day ? 1 : 0);
          if (rec.event_day) w.put<std::int32_t>(*rec.event_day);
          w.put(checked_width<std::uint16_t>(rec.attributes.size(), "attribute list"));
          for (const auto& [name, text] : rec.attributes) {
            put_string16(w, name, "attribute name");
            put_string32(w, text, "attribute text");
          }
        } else if constexpr (std::is_same_v<T, InsertAck>) {
          w.put<std::uint32_t>(msg.node_id);
        } else {
          w.put<std::uint16_t>(msg.code);
          put_string32(w, msg.text, "error text");
        }
      },
      m);
}

// ---- decoding --------------------------------------------------------------

class Decoder {
 public:
  explicit Decoder(std::span<const std::uint8_t> body) : r_(body, Order::kBig) {}

  template <typename T>
  T get() {
    T v{};
    if (!r_.get(v)) end();
    return v;
  }

  double get_f64() {
    double v = 0;
    if (!r_.get_f64(v)) end();
    return v;
  }

  double finite() {
    const double v = get_f64();
    if (!std::isfinite(v)) malformed("non-finite real");
    return v;
  }

  bool flag() {
    const auto b = get<std::uint8_t>();
    if (b > 1) malformed("boolean byte " + std::to_string(b));
    return b == 1;
  }

  std::string text(std::size_t n) {
    std::string s;
    if (!r_.get_raw(n, s)) end();
    return s;
  }

  Point point() {
    const auto dim = get<std::uint8_t>();
    if (dim == 0 || dim > kMaxDimensions) malformed("point dimension " + std::to_string(dim));
    std::array<double, kMaxDimensions> c{};
    for (std::size_t i = 0; i < dim; ++i) c[i] = finite();
    return Point(std::span<const double>(c.data(), dim));
  }

  Query query() {
    const auto kind = get<std::uint8_t>();
    if (kind == 0) {
      KnnQuery q;
      q.center = point();
      q.k = get<std::uint64_t>();
      return q;
    }
    if (kind == 1) {
      RangeQuery q;
      q.center = point();
      q.radius = finite();
      if (q.radius < 0) malformed("negative radius");
      return q;
    }
    malformed("query kind " + std::to_string(kind));
  }

  void need(std::uint64_t count, std::size_t item_bytes) {
    if (count * item_bytes > r_.remaining()) end();
  }

  QueryKind hits(std::vector<Neighbor>& neighbors, std::vector<RecordId>& ids) {
    const auto kind = get<std::uint8_t>();
    if (kind > 1) malformed("result kind " + std::to_string(kind));
    const auto count = get<std::uint32_t>();
    if (kind == 0) {
      need(count, 16);
      neighbors.reserve(count);
      for (std::uint32_t i = 0; i < count; ++i) {
        Neighbor n;
        n.record_id = get<std::uint64_t>();
        n.distance = finite();
        if (n.distance < 0) malformed("negative distance");
        neighbors.push_back(n);
      }
      return QueryKind::kKnn;
    }
    need(count, 8);
    ids.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) ids.push_back(get<std::uint64_t>());
    return QueryKind::kRange;
  }

  Message payload(MessageTag tag) {
    switch (tag) {
      case MessageTag::kQuerySubmit: return QuerySubmit{query()};
      case MessageTag::kQueryAck: return QueryAck{get<std::uint64_t>()};
      case MessageTag::kShardQuery: {
        ShardQuery m;
        m.query_id = get<std::uint64_t>();
        m.query = query();
        return m;
      }
      case MessageTag::kShardResult: {
        ShardResult m;
        m.query_id = get<std::uint64_t>();
        m.node_id = get<std::uint32_t>();
        m.partial.kind = hits(m.partial.neighbors, m.partial.ids);
        return m;
      }
      case MessageTag::kQueryComplete: {
        QueryComplete m;
        QueryResult& r = m.result;
        r.query_id = get<std::uint64_t>();
        r.kind = hits(r.neighbors, r.ids);
        r.from_cache = flag();
        r.shard_count = get<std::uint32_t>();
        r.degraded = flag();
        const auto missing = get<std::uint32_t>();
        need(missing, 4);
        for (std::uint32_t i = 0; i < missing; ++i) r.missing_nodes.push_back(get<std::uint32_t>());
        r.duplicates_removed = get<std::uint64_t>();
        return m;
      }
      case MessageTag::kInsertRecord: {
        InsertRecord m;
        CaseRecord& rec = m.record;
        rec.record_id = get<std::uint64_t>();
        rec.position = point();
        const auto status = get<std::uint8_t>();
        if (status > static_cast<std::uint8_t>(CaseStatus::kUnknown)) {
          malformed("status " + std::to_string(status));
        }
        rec.status = static_cast<CaseStatus>(status);
        if (flag()) rec.event_day = get<std::int32_t>();
        const auto attrs = get<std::uint16_t>();
        need(attrs, 6);
        for (std::uint16_t i = 0; i < attrs; ++i) {
          std::string name = text(get<std::uint16_t>());
          std::string value = text(get<std::uint32_t>());
          rec.attributes.emplace_back(std::move(name), std::move(value));
        }
        return m;
      }
      case MessageTag::kInsertAck: return InsertAck{get<std::uint32_t>()};
      case MessageTag::kError: {
        ErrorMessage m;
        m.code = get<std::uint16_t>();
        m.text = text(get<std::uint32_t>());
        return m;
      }
    }
    throw DecodeError(DecodeErrc::kUnknownVariant,
                      "unknown variant " + std::to_string(static_cast<int>(tag)),
                      static_cast<std::uint8_t>(tag));
  }

  std::size_t remaining() const noexcept { return r_.remaining(); }

  [[noreturn]] static void end() { throw DecodeError(DecodeErrc::kUnexpectedEnd, "unexpected end"); }
  [[noreturn]] static void malformed(const std::string& why) {
    throw DecodeError(DecodeErrc::kMalformed, "malformed field: " + why);
  }

 private:
  bytes::Reader r_;
};

bool known_tag(std::uint8_t tag) noexcept {
  return tag >= static_cast<std::uint8_t>(MessageTag::kQuerySubmit) &&
         tag <= static_cast<std::uint8_t>(MessageTag::kError);
}

}  // namespace

MessageTag tag_of(const Message& m) noexcept {
  return static_cast<MessageTag>(m.index() + 1);
}

std::string_view to_string(DecodeErrc code) noexcept {
  switch (code) {
    case DecodeErrc::kUnexpectedEnd: return "unexpected end";
    case DecodeErrc::kBadMagic: return "bad magic";
    case DecodeErrc::kBadVersion: return "bad version";
    case DecodeErrc::kLengthMismatch: return "length mismatch";
    case DecodeErrc::kUnknownVariant: return "unknown variant";
    case DecodeErrc::kMalformed: return "malformed";
    case DecodeErrc::kTooLarge: return "too large";
  }
  return "unknown";
}

DecodeError::DecodeError(DecodeErrc code, const std::string& detail, std::uint8_t tag)
    : Error(detail), code_(code), tag_(tag) {}

std::vector<std::uint8_t> encode(const Envelope& env) {
  bytes::Writer w(Order::kBig);
  w.put<std::uint32_t>(0);  // patched below
  w.put(kMagic0);
  w.put(kMagic1);
  w.put(kVersion);
  w.put(static_cast<std::uint8_t>(tag_of(env.payload)));
  w.put<std::uint64_t>(env.message_id);
  w.put<std::uint64_t>(env.correlation_id);
  put_string16(w, env.sender, "sender");
  put_payload(w, env.payload);

  auto frame = w.take();
  const std::size_t body = frame.size() - kLengthPrefixBytes;
  if (body > kMaxBodyBytes) {
    throw EncodeError("frame body of " + std::to_string(body) + " bytes exceeds 64 MiB");
  }
  for (std::size_t i = 0; i < kLengthPrefixBytes; ++i) {
    frame[i] = static_cast<std::uint8_t>((body >> (8 * (kLengthPrefixBytes - 1 - i))) & 0xFF);
  }
  return frame;
}

std::optional<std::size_t> complete_frame_size(std::span<const std::uint8_t> buffered) {
  if (buffered.size() < kLengthPrefixBytes) return std::nullopt;
  bytes::Reader r(buffered, Order::kBig);
  std::uint32_t len = 0;
  r.get(len);
  if (len > kMaxBodyBytes) {
    throw DecodeError(DecodeErrc::kTooLarge, "frame body of " + std::to_string(len) +
                                                 " bytes exceeds 64 MiB");
  }
  const std::size_t total = kLengthPrefixBytes + len;
  if (buffered.size() < total) return std::nullopt;
  return total;
}

Envelope decode(std::span<const std::uint8_t> frame) {
  if (frame.size() < kLengthPrefixBytes) Decoder::end();
  const std::size_t total = *[&] {
    auto size = complete_frame_size(frame);
    if (!size) Decoder::end();
    return size;
  }();
  if (frame.size() != total) {
    throw DecodeError(DecodeErrc::kLengthMismatch,
                      "length prefix declares " + std::to_string(total) + " bytes, got " +
                          std::to_string(frame.size()));
  }
  const auto body = frame.subspan(kLengthPrefixBytes);
  if (body.size() < 2) Decoder::end();
  if (body[0] != kMagic0 || body[1] != kMagic1) {
    throw DecodeError(DecodeErrc::kBadMagic, "bad magic");
  }
  if (body.size() < 3) Decoder::end();
  if (body[2] != kVersion) {
    throw DecodeError(DecodeErrc::kBadVersion, "bad version " + std::to_string(body[2]));
  }
  if (body.size() < kFixedHeaderBytes) Decoder::end();
  const std::uint8_t tag = body[3];
  if (!known_tag(tag)) {
    throw DecodeError(DecodeErrc::kUnknownVariant, "unknown variant " + std::to_string(tag), tag);
  }

  Decoder d(body.subspan(4));
  Envelope env;
  env.message_id = d.get<std::uint64_t>();
  env.correlation_id = d.get<std::uint64_t>();
  env.sender = d.text(d.get<std::uint16_t>());
  env.payload = d.payload(static_cast<MessageTag>(tag));
  if (d.remaining() != 0) {
    throw DecodeError(DecodeErrc::kLengthMismatch,
                      std::to_string(d.remaining()) + " trailing bytes after payload");
  }
  return env;
}

}  // namespace caseidx::wire
