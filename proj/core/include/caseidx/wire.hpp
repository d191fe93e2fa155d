#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "caseidx/error.hpp"
#include "caseidx/record.hpp"

namespace caseidx::wire {

// Frame layout, all integers big-endian, reals IEEE-754 binary64:
//
//   u32  body length L (bytes after this field), L <= kMaxBodyBytes
//   u8   magic 'C'
//   u8   magic 'X'
//   u8   version (1)
//   u8   variant tag (see MessageTag)
//   u64  message_id
//   u64  correlation_id
//   u16  sender length S, then S bytes of sender name
//   ...  variant payload
//
// See docs/wire-format.md for the payload of every variant.

inline constexpr std::uint8_t kMagic0 = 'C';
inline constexpr std::uint8_t kMagic1 = 'X';
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kLengthPrefixBytes = 4;
inline constexpr std::size_t kMaxBodyBytes = std::size_t{64} << 20;

enum class MessageTag : std::uint8_t {
  kQuerySubmit = 1,
  kQueryAck = 2,
  kShardQuery = 3,
  kShardResult = 4,
  kQueryComplete = 5,
  kInsertRecord = 6,
  kInsertAck = 7,
  kError = 8,
};

struct QuerySubmit {
  Query query;
  friend bool operator==(const QuerySubmit&, const QuerySubmit&) = default;
};

struct QueryAck {
  QueryId query_id = 0;
  friend bool operator==(const QueryAck&, const QueryAck&) = default;
};

struct ShardQuery {
  QueryId query_id = 0;
  Query query;
  friend bool operator==(const ShardQuery&, const ShardQuery&) = default;
};

/// One shard's local answer: neighbors for KNN, ids for range.
struct PartialResult {
  QueryKind kind = QueryKind::kKnn;
  std::vector<Neighbor> neighbors;
  std::vector<RecordId> ids;
  friend bool operator==(const PartialResult&, const PartialResult&) = default;
};

struct ShardResult {
  QueryId query_id = 0;
  NodeId node_id = 0;
  PartialResult partial;
  friend bool operator==(const ShardResult&, const ShardResult&) = default;
};

struct QueryComplete {
  QueryResult result;
  friend bool operator==(const QueryComplete&, const QueryComplete&) = default;
};

struct InsertRecord {
  CaseRecord record;
  friend bool operator==(const InsertRecord&, const InsertRecord&) = default;
};

struct InsertAck {
  NodeId node_id = 0;
  friend bool operator==(const InsertAck&, const InsertAck&) = default;
};

enum class ErrorCode : std::uint16_t {
  kMalformedQuery = 1,
  kDuplicateId = 2,
  kNotReady = 3,
  kInternal = 4,
  kTimeout = 5,
  kUnavailable = 6,
};

struct ErrorMessage {
  std::uint16_t code = 0;  // an ErrorCode; unknown values are preserved
  std::string text;
  friend bool operator==(const ErrorMessage&, const ErrorMessage&) = default;
};

using Message = std::variant<QuerySubmit, QueryAck, ShardQuery, ShardResult, QueryComplete,
                             InsertRecord, InsertAck, ErrorMessage>;

MessageTag tag_of(const Message& m) noexcept;

struct Envelope {
  std::uint64_t message_id = 0;
  std::uint64_t correlation_id = 0;
  std::string sender;
  Message payload;
  friend bool operator==(const Envelope&, const Envelope&) = default;
};

enum class DecodeErrc {
  kUnexpectedEnd,
  kBadMagic,
  kBadVersion,
  kLengthMismatch,
  kUnknownVariant,
  kMalformed,
  kTooLarge,
};

std::string_view to_string(DecodeErrc code) noexcept;

class DecodeError : public Error {
 public:
  DecodeError(DecodeErrc code, const std::string& detail, std::uint8_t tag = 0);

  DecodeErrc code() const noexcept { return code_; }
  /// Offending tag for kUnknownVariant.
  std::uint8_t tag() const noexcept { return tag_; }

 private:
  DecodeErrc code_;
  std::uint8_t tag_;
};

class EncodeError : public Error {
 public:
  using Error::Error;
};

/// Canonical frame bytes, length prefix included. Throws EncodeError when the
/// body would exceed kMaxBodyBytes or a field does not fit its width.
std::vector<std::uint8_t> encode(const Envelope& env);

/// Decodes exactly one frame. Total on arbitrary input: every failure is a
/// DecodeError, never undefined behaviour.
Envelope decode(std::span<const std::uint8_t> frame);

/// Size of the first complete frame in a stream buffer, or nullopt when more
/// bytes are needed. Throws DecodeError(kTooLarge) on an oversized length.
std::optional<std::size_t> complete_frame_size(std::span<const std::uint8_t> buffered);

}  // namespace caseidx::wire
