#include <gtest/gtest.h>

#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "caseidx/wire.hpp"
#include "test_support.hpp"
#include "wire_gen.hpp"

using namespace caseidx;
using namespace caseidx::wire;
using namespace caseidx::testing;

namespace {

std::vector<std::uint8_t> read_hex(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<std::uint8_t> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string byte;
    while (ls >> byte) out.push_back(static_cast<std::uint8_t>(std::stoul(byte, nullptr, 16)));
  }
  return out;
}


DecodeErrc decode_error(std::span<const std::uint8_t> bytes) {
  try {
    decode(bytes);
  } catch (const DecodeError& e) {
    return e.code();
  }
  ADD_FAILURE() << "decode accepted the input";
  return DecodeErrc::kMalformed;
}

}  // namespace

TEST(Wire, GoldenQueryAck) {
  Envelope env{1, 7, "r", QueryAck{7}};
  const auto golden = read_hex(fixture("query_ack_7.hex"));
  ASSERT_EQ(golden.size(), 35u);
  EXPECT_EQ(encode(env), golden);
  EXPECT_EQ(decode(golden), env);
}

TEST(Wire, RoundTripTenThousandRandomEnvelopes) {
  std::mt19937_64 rng(2020);
  for (int i = 0; i < 10000; ++i) {
    const Envelope env = rand_envelope(rng);
    const auto bytes = encode(env);
    const Envelope back = decode(bytes);
    ASSERT_EQ(back, env) << "iteration " << i;
    ASSERT_EQ(encode(back), bytes);
    ASSERT_EQ(complete_frame_size(bytes), bytes.size());
  }
}

TEST(Wire, EveryTagRoundTrips) {
  std::mt19937_64 rng(3);
  std::set<int> tags;
  for (int i = 0; i < 200; ++i) {
    Envelope env = rand_envelope(rng);
    tags.insert(static_cast<int>(tag_of(env.payload)));
    EXPECT_EQ(decode(encode(env)), env);
  }
  EXPECT_EQ(tags, (std::set<int>{1, 2, 3, 4, 5, 6, 7, 8}));
}

TEST(Wire, EmptyAndTruncatedInput) {
  EXPECT_EQ(decode_error({}), DecodeErrc::kUnexpectedEnd);
  const auto frame = encode(Envelope{1, 2, "node", ShardQuery{9, KnnQuery{Point{1, 2}, 5}}});
  for (std::size_t n = 0; n < frame.size(); ++n) {
    const auto code = decode_error(std::span(frame).first(n));
    EXPECT_TRUE(code == DecodeErrc::kUnexpectedEnd || code == DecodeErrc::kLengthMismatch)
        << "length " << n;
  }
  try {
    decode({});
  } catch (const DecodeError& e) {
    EXPECT_NE(std::string(e.what()).find("unexpected end"), std::string::npos);
  }
}

TEST(Wire, DistinctErrorCodes) {
  const auto good = encode(Envelope{1, 7, "r", QueryAck{7}});
  auto bad_magic = good;
  bad_magic[4] = 'Z';
  EXPECT_EQ(decode_error(bad_magic), DecodeErrc::kBadMagic);
  auto bad_version = good;
  bad_version[6] = 2;
  EXPECT_EQ(decode_error(bad_version), DecodeErrc::kBadVersion);
  auto extra = good;
  extra.push_back(0);
  EXPECT_EQ(decode_error(extra), DecodeErrc::kLengthMismatch);
  auto long_body = good;
  long_body[3] += 1;
  long_body.push_back(0);
  EXPECT_EQ(decode_error(long_body), DecodeErrc::kLengthMismatch);

  auto future = good;
  future[7] = 42;
  try {
    decode(future);
    FAIL();
  } catch (const DecodeError& e) {
    EXPECT_EQ(e.code(), DecodeErrc::kUnknownVariant);
    EXPECT_EQ(e.tag(), 42);
    EXPECT_NE(std::string(e.what()).find("unknown variant"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("42"), std::string::npos);
  }
}

TEST(Wire, NonCanonicalPayloadsRejected) {
  auto frame = encode(Envelope{1, 2, "", QueryComplete{QueryResult{}}});
  // from_cache flag follows query_id (8), kind (1), count (4).
  const std::size_t flag = 4 + 20 + 2 + 8 + 1 + 4;
  ASSERT_LT(flag, frame.size());
  EXPECT_EQ(frame[flag], 0);
  frame[flag] = 2;
  EXPECT_EQ(decode_error(frame), DecodeErrc::kMalformed);

  auto range = encode(Envelope{1, 2, "", QuerySubmit{RangeQuery{Point{0.0}, 1.0}}});
  // Overwrite the radius with -1.0.
  const std::size_t radius = range.size() - 8;
  const std::uint8_t minus_one[8] = {0xbf, 0xf0, 0, 0, 0, 0, 0, 0};
  std::copy(minus_one, minus_one + 8, range.begin() + static_cast<std::ptrdiff_t>(radius));
  EXPECT_EQ(decode_error(range), DecodeErrc::kMalformed);
}

TEST(Wire, OversizeRejected) {
  ErrorMessage big{1, std::string(70u << 20, 'x')};
  EXPECT_THROW(encode(Envelope{1, 2, "n", big}), EncodeError);
  std::vector<std::uint8_t> header{0x04, 0x00, 0x00, 0x01, 'C', 'X', 1, 2};
  EXPECT_EQ(decode_error(header), DecodeErrc::kTooLarge);
  EXPECT_THROW(complete_frame_size(header), DecodeError);
}

TEST(Wire, CompleteFrameSizeOnStream) {
  const auto a = encode(Envelope{1, 7, "r", QueryAck{7}});
  const auto b = encode(Envelope{2, 8, "rr", InsertAck{3}});
  std::vector<std::uint8_t> stream(a);
  stream.insert(stream.end(), b.begin(), b.end());
  EXPECT_EQ(complete_frame_size(stream), a.size());
  EXPECT_EQ(complete_frame_size(std::span(stream).subspan(a.size())), b.size());
  EXPECT_FALSE(complete_frame_size(std::span(stream).first(3)));
  EXPECT_FALSE(complete_frame_size(std::span(stream).first(a.size() - 1)));
}

TEST(Wire, FuzzNeverCrashes) {
  std::mt19937_64 rng(99);
  std::vector<std::vector<std::uint8_t>> seeds;
  for (int i = 0; i < 64; ++i) seeds.push_back(encode(rand_envelope(rng)));
  std::size_t accepted = 0;
  for (int i = 0; i < 20000; ++i) {
    std::vector<std::uint8_t> input;
    if (i % 2 == 0) {
      input.resize(rng() % 96);
      for (auto& b : input) b = static_cast<std::uint8_t>(rng());
    } else {
      // Mutated valid frames reach far deeper into the payload decoders.
      input = seeds[rng() % seeds.size()];
      for (int f = 1 + static_cast<int>(rng() % 4); f > 0; --f) {
        input[rng() % input.size()] ^= static_cast<std::uint8_t>(1 + rng() % 255);
      }
      if (rng() % 4 == 0) input.resize(rng() % (input.size() + 1));
    }
    try {
      Envelope env = decode(input);
      EXPECT_EQ(encode(env), input);
      ++accepted;
    } catch (const DecodeError&) {
    }
  }
  SUCCEED() << accepted << " mutated frames still decoded";
}
