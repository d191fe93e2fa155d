#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "caseidx/error.hpp"
#include "caseidx/rplus_tree.hpp"

namespace caseidx {

/// Shard snapshot layout, version 1. All integers little-endian, coordinates
/// IEEE-754 binary64.
///
///   offset  size  field
///   0       4     magic "CSRT"
///   4       2     version (1)
///   6       1     dimension d
///   7       1     reserved (0)
///   8       4     max_entries
///   12      4     min_fill
///   16      8     record count
///   24      4     height (0 = empty tree)
///   28      ...   node stream, preorder; absent when height == 0
///   end-8   8     FNV-1a 64 of every preceding byte
///
/// Node: u8 kind (0 leaf, 1 internal), u32 count, d f64 region min, d f64
/// region max, then `count` entries (u64 id, d f64 coords) for a leaf or
/// `count` child nodes for an internal node.
inline constexpr std::uint8_t kSnapshotMagic[4] = {'C', 'S', 'R', 'T'};
inline constexpr std::uint16_t kSnapshotVersion = 1;
inline constexpr std::size_t kSnapshotHeaderBytes = 28;
inline constexpr std::size_t kSnapshotTrailerBytes = 8;

class SnapshotError : public Error {
 public:
  using Error::Error;
};

std::vector<std::uint8_t> serialize(const RPlusTree& tree);

/// Throws SnapshotError on any structural, checksum or invariant failure.
RPlusTree deserialize(std::span<const std::uint8_t> bytes);

void write_snapshot(const RPlusTree& tree, const std::filesystem::path& path);
RPlusTree read_snapshot(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace caseidx
