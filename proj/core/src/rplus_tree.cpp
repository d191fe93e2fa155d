#include "caseidx/rplus_tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <tuple>

#include "caseidx/error.hpp"

namespace caseidx {

namespace {

constexpr std::size_t kNoChild = std::numeric_limits<std::size_t>::max();

Rect bounds_of(std::span<const LeafEntry> entries) {
  Rect r = Rect::of_point(entries.front().position);
  for (const auto& e : entries.subspan(1)) r = rect_union(r, e.position);
  return r;
}

Rect bounds_of(const std::vector<std::unique_ptr<Node>>& children) {
  Rect r = children.front()->region;
  for (std::size_t i = 1; i < children.size(); ++i) r = rect_union(r, children[i]->region);
  return r;
}

std::unique_ptr<Node> make_leaf(std::vector<LeafEntry> entries) {
  auto node = std::make_unique<Node>();
  node->leaf = true;
  node->entries = std::move(entries);
  node->recompute_region();
  return node;
}

std::unique_ptr<Node> make_internal(std::vector<std::unique_ptr<Node>> children) {
  auto node = std::make_unique<Node>();
  node->leaf = false;
  node->children = std::move(children);
  node->recompute_region();
  return node;
}

// A single-path subtree of the given height holding one entry.
std::unique_ptr<Node> make_chain(const LeafEntry& entry, std::size_t height) {
  auto node = make_leaf({entry});
  for (std::size_t h = 1; h < height; ++h) {
    std::vector<std::unique_ptr<Node>> kids;
    kids.push_back(std::move(node));
    node = make_internal(std::move(kids));
  }
  return node;
}

Rect clip(const Rect& r, std::size_t axis, double v, bool keep_low) {
  std::array<double, kMaxDimensions> lo{};
  std::array<double, kMaxDimensions> hi{};
  const std::size_t d = r.dimension();
  for (std::size_t i = 0; i < d; ++i) {
    lo[i] = r.min()[i];
    hi[i] = r.max()[i];
  }
  if (keep_low) {
    hi[axis] = v;
  } else {
    lo[axis] = v;
  }
  return Rect(Point(std::span<const double>(lo.data(), d)),
              Point(std::span<const double>(hi.data(), d)));
}

// Cuts a subtree along the plane coord[axis] == v. Points on the plane go to
// the low side. Either piece is null when empty.
std::pair<std::unique_ptr<Node>, std::unique_ptr<Node>> cut_subtree(Node&& node,
                                                                    std::size_t axis, double v) {
  if (node.leaf) {
    std::vector<LeafEntry> low;
    std::vector<LeafEntry> high;
    for (auto& e : node.entries) (e.position[axis] <= v ? low : high).push_back(std::move(e));
    return {low.empty() ? nullptr : make_leaf(std::move(low)),
            high.empty() ? nullptr : make_leaf(std::move(high))};
  }
  std::vector<std::unique_ptr<Node>> low;
  std::vector<std::unique_ptr<Node>> high;
  for (auto& child : node.children) {
    if (child->region.max()[axis] <= v) {
      low.push_back(std::move(child));
    } else if (child->region.min()[axis] >= v) {
      high.push_back(std::move(child));
    } else {
      auto [a, b] = cut_subtree(std::move(*child), axis, v);
      if (a) low.push_back(std::move(a));
      if (b) high.push_back(std::move(b));
    }
  }
  return {low.empty() ? nullptr : make_internal(std::move(low)),
          high.empty() ? nullptr : make_internal(std::move(high))};
}

struct CutCost {
  int tier = std::numeric_limits<int>::max();
  double area = std::numeric_limits<double>::infinity();
  std::size_t imbalance = std::numeric_limits<std::size_t>::max();
  std::size_t straddlers = std::numeric_limits<std::size_t>::max();

  bool operator<(const CutCost& o) const {
    return std::tie(tier, area, imbalance, straddlers) <
           std::tie(o.tier, o.area, o.imbalance, o.straddlers);
  }
};

std::size_t abs_diff(std::size_t a, std::size_t b) { return a > b ? a - b : b - a; }

std::pair<std::unique_ptr<Node>, std::unique_ptr<Node>> split_leaf(Node&& node,
                                                                   const TreeConfig& config) {
  const std::size_t n = node.entries.size();
  const std::size_t d = config.dimension;
  std::vector<std::size_t> order(n);

  CutCost best;
  std::size_t best_cut = 0;
  std::vector<std::size_t> best_order;

  std::vector<double> prefix(n);
  std::vector<double> suffix(n);
  for (std::size_t axis = 0; axis < d; ++axis) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const auto& ea = node.entries[a];
      const auto& eb = node.entries[b];
      if (ea.position[axis] != eb.position[axis]) return ea.position[axis] < eb.position[axis];
      return ea.id < eb.id;
    });
    Rect acc = Rect::of_point(node.entries[order[0]].position);
    for (std::size_t i = 0; i < n; ++i) {
      acc = rect_union(acc, node.entries[order[i]].position);
      prefix[i] = acc.volume();
    }
    acc = Rect::of_point(node.entries[order[n - 1]].position);
    for (std::size_t i = n; i-- > 0;) {
      acc = rect_union(acc, node.entries[order[i]].position);
      suffix[i] = acc.volume();
    }
    bool improved = false;
    for (std::size_t cut = 1; cut < n; ++cut) {
      const double lo = node.entries[order[cut - 1]].position[axis];
      const double hi = node.entries[order[cut]].position[axis];
      if (!(lo < hi)) continue;
      const std::size_t left = cut;
      const std::size_t right = n - cut;
      CutCost cost;
      cost.tier = (left >= config.min_fill && right >= config.min_fill) ? 0 : 1;
      cost.area = prefix[cut - 1] + suffix[cut];
      cost.imbalance = abs_diff(left, right);
      cost.straddlers = 0;
      if (cost < best) {
        best = cost;
        best_cut = cut;
        improved = true;
      }
    }
    if (improved) best_order = order;
  }

  std::vector<LeafEntry> low;
  std::vector<LeafEntry> high;
  if (best_order.empty()) {
    // Every point identical: balanced bisection in id order. Both halves
    // carry the same degenerate region (zero volume).
    std::sort(node.entries.begin(), node.entries.end(),
              [](const LeafEntry& a, const LeafEntry& b) { return a.id < b.id; });
    const std::size_t half = (n + 1) / 2;
    low.assign(node.entries.begin(), node.entries.begin() + static_cast<std::ptrdiff_t>(half));
    high.assign(node.entries.begin() + static_cast<std::ptrdiff_t>(half), node.entries.end());
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      (i < best_cut ? low : high).push_back(std::move(node.entries[best_order[i]]));
    }
  }
  return {make_leaf(std::move(low)), make_leaf(std::move(high))};
}

std::pair<std::unique_ptr<Node>, std::unique_ptr<Node>> split_internal(Node&& node,
                                                                       const TreeConfig& config) {
  auto& kids = node.children;
  const std::size_t n = kids.size();
  const std::size_t d = config.dimension;
  const std::size_t max_side = config.max_entries;

  enum class Side : std::uint8_t { kLow, kHigh, kFlat, kStraddle };

  CutCost best;
  std::size_t best_axis = 0;
  double best_value = 0.0;
  std::size_t best_flat_low = 0;

  std::vector<Side> sides(n);
  std::vector<double> values;
  for (std::size_t axis = 0; axis < d; ++axis) {
    values.clear();
    for (const auto& c : kids) {
      values.push_back(c->region.min()[axis]);
      values.push_back(c->region.max()[axis]);
    }
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());

    for (double v : values) {
      std::size_t n_low = 0;
      std::size_t n_high = 0;
      std::size_t n_flat = 0;
      std::size_t n_straddle = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double lo = kids[i]->region.min()[axis];
        const double hi = kids[i]->region.max()[axis];
        if (lo == v && hi == v) {
          sides[i] = Side::kFlat;
          ++n_flat;
        } else if (hi <= v) {
          sides[i] = Side::kLow;
          ++n_low;
        } else if (lo >= v) {
          sides[i] = Side::kHigh;
          ++n_high;
        } else {
          sides[i] = Side::kStraddle;
          ++n_straddle;
        }
      }
      // Flat children lie in the cut plane and may go to either side.
      std::size_t flat_low = 0;
      std::size_t best_gap = std::numeric_limits<std::size_t>::max();
      for (std::size_t f = 0; f <= n_flat; ++f) {
        const std::size_t gap = abs_diff(n_low + f, n_high + (n_flat - f));
        if (gap < best_gap) {
          best_gap = gap;
          flat_low = f;
        }
      }
      const std::size_t left = n_low + n_straddle + flat_low;
      const std::size_t right = n_high + n_straddle + (n_flat - flat_low);
      if (left == 0 || right == 0 || left > max_side || right > max_side) continue;

      std::optional<Rect> low_box;
      std::optional<Rect> high_box;
      auto grow = [](std::optional<Rect>& box, const Rect& r) {
        box = box ? rect_union(*box, r) : r;
      };
      std::size_t flat_seen = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const Rect& r = kids[i]->region;
        switch (sides[i]) {
          case Side::kLow: grow(low_box, r); break;
          case Side::kHigh: grow(high_box, r); break;
          case Side::kFlat: grow(flat_seen++ < flat_low ? low_box : high_box, r); break;
          case Side::kStraddle:
            grow(low_box, clip(r, axis, v, true));
            grow(high_box, clip(r, axis, v, false));
            break;
        }
      }
      CutCost cost;
      cost.tier = (left >= config.min_fill && right >= config.min_fill) ? 0 : 1;
      cost.area = low_box->volume() + high_box->volume();
      cost.imbalance = abs_diff(left, right);
      cost.straddlers = n_straddle;
      if (cost < best) {
        best = cost;
        best_axis = axis;
        best_value = v;
        best_flat_low = flat_low;
      }
    }
  }
  if (best.tier == std::numeric_limits<int>::max()) {
    throw InvariantError("internal split found no admissible cut; sibling regions overlap");
  }

  std::vector<std::unique_ptr<Node>> low;
  std::vector<std::unique_ptr<Node>> high;
  std::size_t flat_seen = 0;
  for (auto& child : kids) {
    const double lo = child->region.min()[best_axis];
    const double hi = child->region.max()[best_axis];
    if (lo == best_value && hi == best_value) {
      (flat_seen++ < best_flat_low ? low : high).push_back(std::move(child));
    } else if (hi <= best_value) {
      low.push_back(std::move(child));
    } else if (lo >= best_value) {
      high.push_back(std::move(child));
    } else {
      auto [a, b] = cut_subtree(std::move(*child), best_axis, best_value);
      if (a) low.push_back(std::move(a));
      if (b) high.push_back(std::move(b));
    }
  }
  return {make_internal(std::move(low)), make_internal(std::move(high))};
}

// Index of the child an insert of p descends into, or kNoChild when no child
// can absorb p without overlapping a sibling.
std::size_t choose_subtree(const Node& node, const Point& p) {
  const auto& kids = node.children;
  for (std::size_t i = 0; i < kids.size(); ++i) {
    if (kids[i]->region.contains(p)) return i;
  }
  std::size_t best = kNoChild;
  double best_growth = std::numeric_limits<double>::infinity();
  double best_volume = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < kids.size(); ++i) {
    const Rect grown = rect_union(kids[i]->region, p);
    bool clash = false;
    for (std::size_t j = 0; j < kids.size() && !clash; ++j) {
      clash = j != i && interiors_overlap(grown, kids[j]->region);
    }
    if (clash) continue;
    const double volume = kids[i]->region.volume();
    const double growth = grown.volume() - volume;
    if (growth < best_growth || (growth == best_growth && volume < best_volume)) {
      best = i;
      best_growth = growth;
      best_volume = volume;
    }
  }
  return best;
}

// ---- bulk loading ----------------------------------------------------------

void sort_on_axis(std::span<LeafEntry> entries, std::size_t axis) {
  std::sort(entries.begin(), entries.end(), [axis](const LeafEntry& a, const LeafEntry& b) {
    if (a.position[axis] != b.position[axis]) return a.position[axis] < b.position[axis];
    return a.id < b.id;
  });
}

std::size_t slices_for(std::size_t groups, std::size_t remaining_dims) {
  std::size_t s = 1;
  while (true) {
    std::size_t pow = 1;
    for (std::size_t i = 0; i < remaining_dims; ++i) pow *= s;
    if (pow >= groups) return s;
    ++s;
  }
}

// Reorders entries so that consecutive runs of group_sizes[i] entries form
// spatially disjoint tiles.
void tile(std::span<LeafEntry> entries, std::span<const std::size_t> group_sizes,
          std::size_t axis, std::size_t dimension) {
  const std::size_t groups = group_sizes.size();
  if (groups <= 1) return;
  sort_on_axis(entries, axis);
  const std::size_t remaining = dimension - axis;
  if (remaining == 1) return;
  const std::size_t slices = std::min(slices_for(groups, remaining), groups);
  std::size_t offset = 0;
  for (std::size_t s = 0; s < slices; ++s) {
    const std::size_t g0 = groups * s / slices;
    const std::size_t g1 = groups * (s + 1) / slices;
    std::size_t count = 0;
    for (std::size_t g = g0; g < g1; ++g) count += group_sizes[g];
    tile(entries.subspan(offset, count), group_sizes.subspan(g0, g1 - g0), axis + 1, dimension);
    offset += count;
  }
}

std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) r *= base;
  return r;
}

// Builds a subtree of the given height over entries distributed across
// `leaves` near-equal leaves.
std::unique_ptr<Node> build_packed(std::span<LeafEntry> entries, std::size_t leaves,
                                   std::size_t height, const TreeConfig& config) {
  if (height == 1) return make_leaf({entries.begin(), entries.end()});

  const std::size_t cap = ipow(config.max_entries, height - 2);
  const std::size_t n_children = (leaves + cap - 1) / cap;

  const std::size_t n = entries.size();
  const std::size_t base = n / leaves;
  const std::size_t extra = n % leaves;
  std::vector<std::size_t> child_leaves(n_children);
  std::vector<std::size_t> child_sizes(n_children);
  std::size_t leaf_cursor = 0;
  for (std::size_t i = 0; i < n_children; ++i) {
    child_leaves[i] = leaves / n_children + (i < leaves % n_children ? 1 : 0);
    const std::size_t first = leaf_cursor;
    const std::size_t last = leaf_cursor + child_leaves[i];
    const std::size_t extras = std::min(last, extra) - std::min(first, extra);
    child_sizes[i] = child_leaves[i] * base + extras;
    leaf_cursor = last;
  }
  tile(entries, child_sizes, 0, config.dimension);

  std::vector<std::unique_ptr<Node>> kids;
  kids.reserve(n_children);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < n_children; ++i) {
    kids.push_back(build_packed(entries.subspan(offset, child_sizes[i]), child_leaves[i],
                                height - 1, config));
    offset += child_sizes[i];
  }
  return make_internal(std::move(kids));
}

void collect_depth_violations(const Node& node, std::size_t depth, std::size_t height,
                              const std::string& path, std::vector<Violation>& out) {
  if (node.leaf) {
    if (depth != height) {
      out.push_back({Violation::Kind::kDepth, path,
                     "leaf at depth " + std::to_string(depth) + ", expected " +
                         std::to_string(height)});
    }
    return;
  }
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    collect_depth_violations(*node.children[i], depth + 1, height,
                             path + "/" + std::to_string(i), out);
  }
}

}  // namespace

// ---- TreeConfig ------------------------------------------------------------

TreeConfig TreeConfig::with_capacity(std::size_t max_entries, std::size_t dimension) {
  TreeConfig c;
  c.max_entries = max_entries;
  c.min_fill = std::max<std::size_t>(1, max_entries * 40 / 100);
  c.dimension = dimension;
  return c;
}

void TreeConfig::validate() const {
  if (max_entries < 4) throw UsageError("max_entries must be >= 4");
  if (min_fill < 1 || min_fill > max_entries / 2) {
    throw UsageError("min_fill must lie in [1, max_entries/2]");
  }
  if (dimension < 1 || dimension > kMaxDimensions) {
    throw UsageError("dimension must lie in [1, " + std::to_string(kMaxDimensions) + "]");
  }
}

// ---- Node ------------------------------------------------------------------

std::size_t Node::record_count() const noexcept {
  if (leaf) return entries.size();
  std::size_t n = 0;
  for (const auto& c : children) n += c->record_count();
  return n;
}

std::unique_ptr<Node> Node::clone() const {
  auto copy = std::make_unique<Node>();
  copy->region = region;
  copy->leaf = leaf;
  copy->entries = entries;
  copy->children.reserve(children.size());
  for (const auto& c : children) copy->children.push_back(c->clone());
  return copy;
}

void Node::recompute_region() {
  if (leaf) {
    if (!entries.empty()) region = bounds_of(entries);
  } else if (!children.empty()) {
    region = bounds_of(children);
  }
}

std::string_view to_string(Violation::Kind kind) noexcept {
  switch (kind) {
    case Violation::Kind::kContainment: return "containment";
    case Violation::Kind::kOverlap: return "overlap";
    case Violation::Kind::kCapacity: return "capacity";
    case Violation::Kind::kUnderfill: return "underfill";
    case Violation::Kind::kDepth: return "depth";
    case Violation::Kind::kSize: return "size";
    case Violation::Kind::kEmptyNode: return "empty_node";
    case Violation::Kind::kDimension: return "dimension";
    case Violation::Kind::kDuplicateId: return "duplicate_id";
  }
  return "unknown";
}

void str_tile(std::span<LeafEntry> entries, std::span<const std::size_t> group_sizes,
              std::size_t dimension) {
  std::size_t total = 0;
  for (std::size_t g : group_sizes) total += g;
  if (total != entries.size()) throw UsageError("group sizes do not sum to entry count");
  tile(entries, group_sizes, 0, dimension);
}

std::size_t node_bytes(std::size_t dimension) noexcept { return 5 + 16 * dimension; }
std::size_t entry_bytes(std::size_t dimension) noexcept { return 8 + 8 * dimension; }

std::pair<std::unique_ptr<Node>, std::unique_ptr<Node>> split_node(Node&& node,
                                                                   const TreeConfig& config) {
  if (node.fanout() < 2) throw InvariantError("cannot split a node with fewer than 2 entries");
  return node.leaf ? split_leaf(std::move(node), config) : split_internal(std::move(node), config);
}

// ---- RPlusTree -------------------------------------------------------------

RPlusTree::RPlusTree(TreeConfig config) : config_(config) { config_.validate(); }

RPlusTree::RPlusTree(const RPlusTree& other)
    : config_(other.config_),
      root_(other.root_ ? other.root_->clone() : nullptr),
      size_(other.size_),
      height_(other.height_),
      ids_(other.ids_) {}

RPlusTree& RPlusTree::operator=(const RPlusTree& other) {
  if (this != &other) *this = RPlusTree(other);
  return *this;
}

RPlusTree RPlusTree::bulk_load(TreeConfig config, std::span<const CaseRecord> records) {
  std::vector<LeafEntry> entries;
  entries.reserve(records.size());
  for (const auto& r : records) entries.push_back({r.record_id, r.position});
  return bulk_load(config, std::move(entries));
}

RPlusTree RPlusTree::bulk_load(TreeConfig config, std::vector<LeafEntry> entries) {
  RPlusTree tree(config);
  if (entries.empty()) return tree;

  std::vector<RecordId> dupes;
  tree.ids_.reserve(entries.size());
  for (const auto& e : entries) {
    require_same_dimension(e.position.dimension(), config.dimension);
    if (!tree.ids_.insert(e.id).second) dupes.push_back(e.id);
  }
  if (!dupes.empty()) {
    std::sort(dupes.begin(), dupes.end());
    dupes.erase(std::unique(dupes.begin(), dupes.end()), dupes.end());
    throw DuplicateIdError(std::move(dupes), "bulk_load");
  }

  const std::size_t n = entries.size();
  const std::size_t m = config.max_entries;
  const std::size_t leaves = (n + m - 1) / m;
  std::size_t height = 1;
  while (ipow(m, height - 1) < leaves) ++height;

  tree.root_ = build_packed(entries, leaves, height, config);
  tree.size_ = n;
  tree.height_ = height;
  return tree;
}

RPlusTree RPlusTree::adopt(TreeConfig config, std::unique_ptr<Node> root, std::size_t height) {
  RPlusTree tree(config);
  if (!root) return tree;
  std::vector<const Node*> stack{root.get()};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (n->leaf) {
      tree.size_ += n->entries.size();
      for (const auto& e : n->entries) tree.ids_.insert(e.id);
    } else {
      for (const auto& c : n->children) stack.push_back(c.get());
    }
  }
  tree.root_ = std::move(root);
  tree.height_ = height;
  return tree;
}

void RPlusTree::insert(RecordId id, const Point& position) {
  require_same_dimension(position.dimension(), config_.dimension);
  if (ids_.contains(id)) throw DuplicateIdError({id}, "insert");

  const LeafEntry entry{id, position};
  if (!root_) {
    root_ = make_leaf({entry});
    height_ = 1;
  } else if (auto sibling = insert_into(*root_, entry, height_)) {
    std::vector<std::unique_ptr<Node>> kids;
    kids.push_back(std::move(root_));
    kids.push_back(std::move(sibling));
    root_ = make_internal(std::move(kids));
    ++height_;
  }
  ids_.insert(id);
  ++size_;
}

std::unique_ptr<Node> RPlusTree::insert_into(Node& node, const LeafEntry& entry,
                                             std::size_t level) {
  node.region = rect_union(node.region, entry.position);
  if (node.leaf) {
    node.entries.push_back(entry);
  } else {
    const std::size_t idx = choose_subtree(node, entry.position);
    if (idx == kNoChild) {
      node.children.push_back(make_chain(entry, level - 1));
    } else if (auto sibling = insert_into(*node.children[idx], entry, level - 1)) {
      node.children.insert(node.children.begin() + static_cast<std::ptrdiff_t>(idx) + 1,
                           std::move(sibling));
    }
  }
  if (node.fanout() <= config_.max_entries) return nullptr;
  auto [low, high] = split_node(std::move(node), config_);
  node = std::move(*low);
  return std::move(high);
}

std::vector<RecordId> RPlusTree::range_query(const Point& center, double radius) const {
  if (!(radius >= 0.0)) throw UsageError("range radius must be non-negative");
  require_same_dimension(center.dimension(), config_.dimension);
  std::vector<RecordId> out;
  if (!root_) return out;
  std::vector<const Node*> stack{root_.get()};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (mindist(center, n->region) > radius) continue;
    if (n->leaf) {
      for (const auto& e : n->entries) {
        if (distance(center, e.position) <= radius) out.push_back(e.id);
      }
    } else {
      for (const auto& c : n->children) stack.push_back(c.get());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Neighbor> RPlusTree::knn_query(const Point& center, std::uint64_t k) const {
  require_same_dimension(center.dimension(), config_.dimension);
  std::vector<Neighbor> best;
  if (!root_ || k == 0) return best;

  struct Frontier {
    double dist;
    const Node* node;
    bool operator>(const Frontier& o) const { return dist > o.dist; }
  };
  std::priority_queue<Frontier, std::vector<Frontier>, std::greater<>> frontier;
  // Max-heap on (distance, id): the current worst candidate sits on top.
  auto worse = [](const Neighbor& a, const Neighbor& b) { return neighbor_less(a, b); };
  std::priority_queue<Neighbor, std::vector<Neighbor>, decltype(worse)> candidates(worse);

  const auto full = [&] { return candidates.size() >= k; };
  frontier.push({mindist(center, root_->region), root_.get()});
  while (!frontier.empty()) {
    const Frontier top = frontier.top();
    if (full() && top.dist > candidates.top().distance) break;
    frontier.pop();
    if (top.node->leaf) {
      for (const auto& e : top.node->entries) {
        const Neighbor cand{e.id, distance(center, e.position)};
        if (!full()) {
          candidates.push(cand);
        } else if (neighbor_less(cand, candidates.top())) {
          candidates.pop();
          candidates.push(cand);
        }
      }
    } else {
      for (const auto& c : top.node->children) {
        const double md = mindist(center, c->region);
        if (full() && md > candidates.top().distance) continue;
        frontier.push({md, c.get()});
      }
    }
  }
  best.reserve(candidates.size());
  while (!candidates.empty()) {
    best.push_back(candidates.top());
    candidates.pop();
  }
  std::reverse(best.begin(), best.end());
  return best;
}

std::optional<Rect> RPlusTree::bounds() const {
  if (!root_) return std::nullopt;
  return root_->region;
}

std::vector<LeafEntry> RPlusTree::entries() const {
  std::vector<LeafEntry> out;
  out.reserve(size_);
  std::vector<const Node*> stack;
  if (root_) stack.push_back(root_.get());
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (n->leaf) {
      out.insert(out.end(), n->entries.begin(), n->entries.end());
    } else {
      for (const auto& c : n->children) stack.push_back(c.get());
    }
  }
  std::sort(out.begin(), out.end(), [](const LeafEntry& a, const LeafEntry& b) { return a.id < b.id; });
  return out;
}

std::vector<Violation> RPlusTree::validate(ValidateOptions options) const {
  std::vector<Violation> out;
  if (!root_) {
    if (size_ != 0) {
      out.push_back({Violation::Kind::kSize, "/",
                     "empty tree reports size " + std::to_string(size_)});
    }
    return out;
  }

  std::size_t entries = 0;
  std::unordered_set<RecordId> seen;
  struct Item {
    const Node* node;
    std::string path;
    bool is_root;
  };
  std::vector<Item> stack{{root_.get(), "", true}};
  while (!stack.empty()) {
    Item item = std::move(stack.back());
    stack.pop_back();
    const Node& n = *item.node;
    const std::string path = item.path.empty() ? "/" : item.path;

    if (n.region.dimension() != config_.dimension) {
      out.push_back({Violation::Kind::kDimension, path, "region dimension differs from config"});
      continue;
    }
    const std::size_t fan = n.fanout();
    if (fan == 0) {
      out.push_back({Violation::Kind::kEmptyNode, path, "node holds nothing"});
      continue;
    }
    if (fan > config_.max_entries) {
      out.push_back({Violation::Kind::kCapacity, path,
                     std::to_string(fan) + " > max_entries " +
                         std::to_string(config_.max_entries)});
    }
    if (options.check_min_fill && !item.is_root && fan < config_.min_fill) {
      out.push_back({Violation::Kind::kUnderfill, path,
                     std::to_string(fan) + " < min_fill " + std::to_string(config_.min_fill)});
    }

    if (n.leaf) {
      for (const auto& e : n.entries) {
        ++entries;
        if (!seen.insert(e.id).second) {
          out.push_back({Violation::Kind::kDuplicateId, path,
                         "record " + std::to_string(e.id) + " stored twice"});
        }
        if (e.position.dimension() != config_.dimension) {
          out.push_back({Violation::Kind::kDimension, path,
                         "record " + std::to_string(e.id) + " has wrong dimension"});
        } else if (!n.region.contains(e.position)) {
          out.push_back({Violation::Kind::kContainment, path,
                         "record " + std::to_string(e.id) + " outside leaf region"});
        }
      }
      continue;
    }

    for (std::size_t i = 0; i < n.children.size(); ++i) {
      const Node& c = *n.children[i];
      const std::string child_path = item.path + "/" + std::to_string(i);
      if (c.region.dimension() == config_.dimension && !n.region.contains(c.region)) {
        out.push_back({Violation::Kind::kContainment, child_path,
                       c.region.to_string() + " not inside parent " + n.region.to_string()});
      }
      for (std::size_t j = i + 1; j < n.children.size(); ++j) {
        const Node& o = *n.children[j];
        if (c.region.dimension() == o.region.dimension() &&
            interiors_overlap(c.region, o.region)) {
          out.push_back({Violation::Kind::kOverlap, child_path,
                         "interior overlaps sibling " + std::to_string(j)});
        }
      }
      stack.push_back({&c, child_path, false});
    }
  }

  collect_depth_violations(*root_, 1, height_, "", out);
  if (entries != size_) {
    out.push_back({Violation::Kind::kSize, "/",
                   "leaf entries " + std::to_string(entries) + " != size " +
                       std::to_string(size_)});
  }
  return out;
}

TreeStats RPlusTree::stats() const {
  TreeStats s;
  s.bytes_per_node = node_bytes(config_.dimension);
  s.bytes_per_entry = entry_bytes(config_.dimension);
  if (!root_) return s;
  std::vector<const Node*> stack{root_.get()};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    ++s.node_count;
    if (n->leaf) {
      ++s.leaf_count;
      s.size += n->entries.size();
    } else {
      for (const auto& c : n->children) stack.push_back(c.get());
    }
  }
  s.depth = height_;
  s.estimated_bytes = s.node_count * s.bytes_per_node + s.size * s.bytes_per_entry;
  return s;
}

}  // namespace caseidx
