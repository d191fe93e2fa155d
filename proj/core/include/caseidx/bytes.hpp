#pragma once

// Fixed-width integer and IEEE-754 packing with an explicit byte order.

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace caseidx::bytes {

enum class Order { kLittle, kBig };

class Writer {
 public:
  explicit Writer(Order order) : order_(order) {}

  template <typename T>
    requires std::is_integral_v<T>
  void put(T value) {
    using U = std::make_unsigned_t<T>;
    const U u = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      const std::size_t shift = order_ == Order::kLittle ? i * 8 : (sizeof(T) - 1 - i) * 8;
      buf_.push_back(static_cast<std::uint8_t>((u >> shift) & 0xFF));
    }
  }

  void put_f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }

  void put_raw(std::span<const std::uint8_t> raw) { buf_.insert(buf_.end(), raw.begin(), raw.end()); }
  void put_raw(std::string_view raw) {
    buf_.insert(buf_.end(), reinterpret_cast<const std::uint8_t*>(raw.data()),
                reinterpret_cast<const std::uint8_t*>(raw.data()) + raw.size());
  }

  std::size_t size() const noexcept { return buf_.size(); }
  std::vector<std::uint8_t>& buffer() noexcept { return buf_; }
  std::vector<std::uint8_t> take() noexcept { return std::move(buf_); }

 private:
  Order order_;
  std::vector<std::uint8_t> buf_;
};

/// Bounds-checked reader. get() returns false instead of reading past the end.
class Reader {
 public:
  Reader(std::span<const std::uint8_t> data, Order order) : data_(data), order_(order) {}

  template <typename T>
    requires std::is_integral_v<T>
  bool get(T& out) {
    if (remaining() < sizeof(T)) return false;
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      const std::size_t shift = order_ == Order::kLittle ? i * 8 : (sizeof(T) - 1 - i) * 8;
      u |= static_cast<U>(static_cast<U>(data_[pos_ + i]) << shift);
    }
    pos_ += sizeof(T);
    out = static_cast<T>(u);
    return true;
  }

  bool get_f64(double& out) {
    std::uint64_t bits = 0;
    if (!get(bits)) return false;
    out = std::bit_cast<double>(bits);
    return true;
  }

  bool get_raw(std::size_t n, std::string& out) {
    if (remaining() < n) return false;
    out.assign(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return true;
  }

  std::size_t position() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }

 private:
  std::span<const std::uint8_t> data_;
  Order order_;
  std::size_t pos_ = 0;
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::span<const std::uint8_t> data) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : data) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace caseidx::bytes
