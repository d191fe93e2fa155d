#include "caseidx/snapshot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>

#include "caseidx/bytes.hpp"

namespace caseidx {

namespace {

using bytes::Order;

void write_rect(bytes::Writer& w, const Rect& r) {
  for (double c : r.min().coords()) w.put_f64(c);
  for (double c : r.max().coords()) w.put_f64(c);
}

void write_node(bytes::Writer& w, const Node& node) {
  w.put<std::uint8_t>(node.leaf ? 0 : 1);
  w.put(static_cast<std::uint32_t>(node.fanout()));
  write_rect(w, node.region);
  if (node.leaf) {
    for (const auto& e : node.entries) {
      w.put<std::uint64_t>(e.id);
      for (double c : e.position.coords()) w.put_f64(c);
    }
  } else {
    for (const auto& c : node.children) write_node(w, *c);
  }
}

class NodeReader {
 public:
  NodeReader(bytes::Reader& r, const TreeConfig& config) : r_(r), config_(config) {}

  Point point() {
    std::array<double, kMaxDimensions> c{};
    for (std::size_t i = 0; i < config_.dimension; ++i) {
      if (!r_.get_f64(c[i])) fail("truncated coordinate");
      if (!std::isfinite(c[i])) fail("non-finite coordinate");
    }
    return Point(std::span<const double>(c.data(), config_.dimension));
  }

  std::unique_ptr<Node> node(std::size_t levels_left) {
    if (levels_left == 0) fail("node stream deeper than declared height");
    std::uint8_t kind = 0;
    std::uint32_t count = 0;
    if (!r_.get(kind) || !r_.get(count)) fail("truncated node header");
    if (kind > 1) fail("unknown node kind " + std::to_string(kind));
    if (count == 0 || count > config_.max_entries) {
      fail("node count " + std::to_string(count) + " out of range");
    }
    auto n = std::make_unique<Node>();
    const Point lo = point();
    const Point hi = point();
    try {
      n->region = Rect(lo, hi);
    } catch (const Error& e) {
      fail(std::string("bad region: ") + e.what());
    }
    n->leaf = kind == 0;
    if (n->leaf) {
      if (levels_left != 1) fail("leaf above the bottom level");
      n->entries.reserve(count);
      for (std::uint32_t i = 0; i < count; ++i) {
        LeafEntry e;
        if (!r_.get(e.id)) fail("truncated entry");
        e.position = point();
        n->entries.push_back(std::move(e));
      }
    } else {
      n->children.reserve(count);
      for (std::uint32_t i = 0; i < count; ++i) n->children.push_back(node(levels_left - 1));
    }
    return n;
  }

  [[noreturn]] static void fail(const std::string& why) {
    throw SnapshotError("corrupt snapshot: " + why);
  }

 private:
  bytes::Reader& r_;
  const TreeConfig& config_;
};

}  // namespace

std::vector<std::uint8_t> serialize(const RPlusTree& tree) {
  bytes::Writer w(Order::kLittle);
  for (std::uint8_t b : kSnapshotMagic) w.put(b);
  w.put(kSnapshotVersion);
  w.put(static_cast<std::uint8_t>(tree.config().dimension));
  w.put<std::uint8_t>(0);
  w.put(static_cast<std::uint32_t>(tree.config().max_entries));
  w.put(static_cast<std::uint32_t>(tree.config().min_fill));
  w.put(static_cast<std::uint64_t>(tree.size()));
  w.put(static_cast<std::uint32_t>(tree.height()));
  if (tree.root()) write_node(w, *tree.root());
  w.put(bytes::fnv1a(w.buffer()));
  return w.take();
}

RPlusTree deserialize(std::span<const std::uint8_t> data) {
  if (data.size() < kSnapshotHeaderBytes + kSnapshotTrailerBytes) {
    NodeReader::fail("file shorter than header");
  }
  if (!std::equal(std::begin(kSnapshotMagic), std::end(kSnapshotMagic), data.begin())) {
    NodeReader::fail("bad magic");
  }
  const auto body = data.first(data.size() - kSnapshotTrailerBytes);
  bytes::Reader trailer(data.last(kSnapshotTrailerBytes), Order::kLittle);
  std::uint64_t checksum = 0;
  trailer.get(checksum);
  if (checksum != bytes::fnv1a(body)) NodeReader::fail("checksum mismatch");

  bytes::Reader r(body, Order::kLittle);
  std::uint32_t magic = 0;
  std::uint16_t version = 0;
  std::uint8_t dimension = 0;
  std::uint8_t reserved = 0;
  std::uint32_t max_entries = 0;
  std::uint32_t min_fill = 0;
  std::uint64_t size = 0;
  std::uint32_t height = 0;
  r.get(magic);
  r.get(version);
  r.get(dimension);
  r.get(reserved);
  r.get(max_entries);
  r.get(min_fill);
  r.get(size);
  r.get(height);
  if (version != kSnapshotVersion) NodeReader::fail("unsupported version " + std::to_string(version));

  TreeConfig config;
  config.dimension = dimension;
  config.max_entries = max_entries;
  config.min_fill = min_fill;
  try {
    config.validate();
  } catch (const Error& e) {
    NodeReader::fail(std::string("bad config: ") + e.what());
  }

  std::unique_ptr<Node> root;
  if (height > 0) {
    NodeReader nodes(r, config);
    root = nodes.node(height);
  } else if (size != 0) {
    NodeReader::fail("empty tree with nonzero size");
  }
  if (r.remaining() != 0) NodeReader::fail("trailing bytes after node stream");

  RPlusTree tree = RPlusTree::adopt(config, std::move(root), height);
  if (tree.size() != size) NodeReader::fail("record count does not match header");
  if (auto violations = tree.validate(); !violations.empty()) {
    NodeReader::fail("invariant violated at " + violations.front().path + ": " +
                     violations.front().detail);
  }
  return tree;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

void write_snapshot(const RPlusTree& tree, const std::filesystem::path& path) {
  write_file_bytes(path, serialize(tree));
}

RPlusTree read_snapshot(const std::filesystem::path& path) {
  return deserialize(read_file_bytes(path));
}

}  // namespace caseidx
