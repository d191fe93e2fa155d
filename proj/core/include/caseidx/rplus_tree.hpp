#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "caseidx/geometry.hpp"
#include "caseidx/record.hpp"

namespace caseidx {

/// Node capacity parameters. Invariant: 1 <= min_fill <= max_entries / 2 and
/// max_entries >= 4.
struct TreeConfig {
  std::size_t max_entries = 64;
  std::size_t min_fill = 25;
  std::size_t dimension = 2;

  /// Config with min_fill at 40% of capacity (at least 1).
  static TreeConfig with_capacity(std::size_t max_entries, std::size_t dimension = 2);

  void validate() const;

  friend bool operator==(const TreeConfig&, const TreeConfig&) = default;
};

struct LeafEntry {
  RecordId id = 0;
  Point position;

  friend bool operator==(const LeafEntry&, const LeafEntry&) = default;
};

/// A tree node. Leaves hold entries, internal nodes hold children; region is
/// the bounding box of the contents.
struct Node {
  Rect region;
  bool leaf = true;
  std::vector<LeafEntry> entries;
  std::vector<std::unique_ptr<Node>> children;

  std::size_t fanout() const noexcept { return leaf ? entries.size() : children.size(); }
  std::size_t record_count() const noexcept;
  std::unique_ptr<Node> clone() const;
  /// Recomputes region from the direct contents (children regions or entry points).
  void recompute_region();
};

struct Violation {
  enum class Kind {
    kContainment,
    kOverlap,
    kCapacity,
    kUnderfill,
    kDepth,
    kSize,
    kEmptyNode,
    kDimension,
    kDuplicateId,
  };

  Kind kind;
  std::string path;  // child indices from the root, e.g. "/0/3"
  std::string detail;
};

std::string_view to_string(Violation::Kind kind) noexcept;

struct ValidateOptions {
  /// Require min_fill on every non-root node (bulk-loaded trees only).
  bool check_min_fill = false;
};

struct TreeStats {
  std::size_t node_count = 0;
  std::size_t leaf_count = 0;
  std::size_t depth = 0;
  std::size_t size = 0;
  std::size_t estimated_bytes = 0;

  // estimated_bytes = node_count * bytes_per_node + size * bytes_per_entry,
  // the size of the snapshot node stream.
  std::size_t bytes_per_node = 0;
  std::size_t bytes_per_entry = 0;

  friend bool operator==(const TreeStats&, const TreeStats&) = default;
};

std::size_t node_bytes(std::size_t dimension) noexcept;
std::size_t entry_bytes(std::size_t dimension) noexcept;

/// Splits an overflowing node (M + 1 entries or children) into two nodes with
/// disjoint-interior regions. Internal splits propagate the cut downwards
/// into any child straddling the cut plane.
std::pair<std::unique_ptr<Node>, std::unique_ptr<Node>> split_node(Node&& node,
                                                                   const TreeConfig& config);

/// Sort-tile-recursive tiling: reorders entries so that consecutive runs of
/// group_sizes[i] entries occupy boxes with pairwise disjoint interiors.
/// Ties are broken by entry id.
void str_tile(std::span<LeafEntry> entries, std::span<const std::size_t> group_sizes,
              std::size_t dimension);

/// R+-tree over point records: sibling regions never share interior volume,
/// so every record lives in exactly one leaf.
///
/// Single writer; concurrent const queries are safe between writes.
class RPlusTree {
 public:
  explicit RPlusTree(TreeConfig config = {});

  RPlusTree(RPlusTree&&) noexcept = default;
  RPlusTree& operator=(RPlusTree&&) noexcept = default;
  RPlusTree(const RPlusTree& other);
  RPlusTree& operator=(const RPlusTree& other);

  /// Sort-tile-recursive packing. Throws DuplicateIdError listing offenders.
  static RPlusTree bulk_load(TreeConfig config, std::span<const CaseRecord> records);
  static RPlusTree bulk_load(TreeConfig config, std::vector<LeafEntry> entries);

  void insert(const CaseRecord& record) { insert(record.record_id, record.position); }
  void insert(RecordId id, const Point& position);

  /// Ids within the closed ball, ascending.
  std::vector<RecordId> range_query(const Point& center, double radius) const;

  /// min(k, size) nearest records ordered by (distance, record_id).
  std::vector<Neighbor> knn_query(const Point& center, std::uint64_t k) const;

  std::vector<Violation> validate(ValidateOptions options = {}) const;
  TreeStats stats() const;

  const TreeConfig& config() const noexcept { return config_; }
  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }
  bool contains(RecordId id) const { return ids_.contains(id); }
  std::optional<Rect> bounds() const;
  /// Every stored entry, ascending by id.
  std::vector<LeafEntry> entries() const;
  /// Number of levels; 0 for an empty tree.
  std::size_t height() const noexcept { return height_; }

  const Node* root() const noexcept { return root_.get(); }

  /// Mutable access for fixtures that corrupt a tree on purpose.
  Node* mutable_root_for_testing() noexcept { return root_.get(); }

  /// Adopts an already built node hierarchy (snapshot loading). The result
  /// must be checked with validate() by the caller.
  static RPlusTree adopt(TreeConfig config, std::unique_ptr<Node> root, std::size_t height);

 private:
  std::unique_ptr<Node> insert_into(Node& node, const LeafEntry& entry, std::size_t level);

  TreeConfig config_;
  std::unique_ptr<Node> root_;
  std::size_t size_ = 0;
  std::size_t height_ = 0;
  std::unordered_set<RecordId> ids_;
};

}  // namespace caseidx
