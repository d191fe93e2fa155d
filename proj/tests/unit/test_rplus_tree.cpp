#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "caseidx/error.hpp"
#include "caseidx/rplus_tree.hpp"
#include "caseidx/synthetic.hpp"
#include "test_support.hpp"

using namespace caseidx;
using namespace caseidx::testing;

namespace {

std::unique_ptr<Node> leaf_of(std::vector<LeafEntry> entries) {
  auto n = std::make_unique<Node>();
  n->leaf = true;
  n->entries = std::move(entries);
  n->recompute_region();
  return n;
}

void collect_leaves(const Node& n, std::vector<const Node*>& out) {
  if (n.leaf) {
    out.push_back(&n);
    return;
  }
  for (const auto& c : n.children) collect_leaves(*c, out);
}

void expect_oracle_equal(const RPlusTree& tree, const LinearScan& scan, std::mt19937_64& rng,
                         int trials, std::size_t dim, double lo, double hi) {
  std::uniform_real_distribution<double> radius(0.0, (hi - lo) / 4);
  const std::uint64_t ks[] = {0, 1, 10, 100, 1000};
  for (int t = 0; t < trials; ++t) {
    Point c = random_point(rng, dim, lo, hi);
    const std::uint64_t k = ks[t % 5];
    ASSERT_EQ(tree.knn_query(c, k), scan.knn(c, k)) << "knn k=" << k << " at " << c.to_string();
    const double r = radius(rng);
    ASSERT_EQ(tree.range_query(c, r), scan.range(c, r)) << "range r=" << r;
  }
}

}  // namespace

TEST(TreeConfig, Validation) {
  EXPECT_THROW(RPlusTree(TreeConfig{3, 1, 2}), UsageError);
  EXPECT_THROW(RPlusTree(TreeConfig{8, 5, 2}), UsageError);
  EXPECT_THROW(RPlusTree(TreeConfig{8, 0, 2}), UsageError);
  EXPECT_NO_THROW(RPlusTree(TreeConfig{8, 4, 2}));
  EXPECT_EQ(TreeConfig::with_capacity(64).min_fill, 25u);
  EXPECT_EQ(TreeConfig::with_capacity(4).min_fill, 1u);
}

TEST(Insert, EmptyTreeBecomesSingleLeaf) {
  RPlusTree t;
  t.insert(42, Point{1, 2});
  EXPECT_EQ(t.size(), 1u);
  ASSERT_NE(t.root(), nullptr);
  EXPECT_TRUE(t.root()->leaf);
  EXPECT_EQ(t.root()->entries.at(0).id, 42u);
  EXPECT_TRUE(t.validate().empty());
}

TEST(Insert, OverflowSplitsRootIntoTwoLeaves) {
  RPlusTree t(TreeConfig::with_capacity(4));
  for (int i = 0; i < 5; ++i) t.insert(i + 1, Point{double(i), double(i * i % 3)});
  ASSERT_FALSE(t.root()->leaf);
  ASSERT_EQ(t.root()->children.size(), 2u);
  EXPECT_TRUE(t.root()->children[0]->leaf);
  EXPECT_TRUE(t.root()->children[1]->leaf);
  EXPECT_FALSE(interiors_overlap(t.root()->children[0]->region, t.root()->children[1]->region));
  EXPECT_TRUE(t.validate().empty()) << describe(t.validate());
}

TEST(Insert, RejectsDuplicateAndWrongDimension) {
  RPlusTree t;
  t.insert(1, Point{0, 0});
  EXPECT_THROW(t.insert(1, Point{5, 5}), DuplicateIdError);
  EXPECT_THROW(t.insert(2, Point{5, 5, 5}), DimensionError);
  EXPECT_EQ(t.size(), 1u);
}

TEST(Insert, TenThousandRandomMatchesLinearScan) {
  std::mt19937_64 rng(2024);
  RPlusTree t(TreeConfig::with_capacity(16));
  LinearScan scan;
  for (RecordId id = 1; id <= 10000; ++id) {
    Point p = id % 3 == 0 ? grid_point(rng, 2, 50) : random_point(rng, 2);
    t.insert(id, p);
    scan.add(id, p);
    if (id % 1000 == 0) {
      ASSERT_TRUE(t.validate().empty()) << describe(t.validate());
    }
  }
  EXPECT_EQ(t.size(), 10000u);
  expect_oracle_equal(t, scan, rng, 100, 2, 0, 100);
}

TEST(Insert, ManyIdenticalPointsStayValid) {
  RPlusTree t(TreeConfig::with_capacity(4));
  LinearScan scan;
  for (RecordId id = 1; id <= 300; ++id) {
    Point p = id % 5 == 0 ? Point{double(id % 7), 1.0} : Point{3.0, 3.0};
    t.insert(id, p);
    scan.add(id, p);
    ASSERT_TRUE(t.validate().empty()) << "after " << id << "\n" << describe(t.validate());
  }
  std::mt19937_64 rng(1);
  expect_oracle_equal(t, scan, rng, 50, 2, 0, 8);
}

TEST(Insert, ThreeDimensionalOracle) {
  std::mt19937_64 rng(77);
  RPlusTree t(TreeConfig::with_capacity(8, 3));
  LinearScan scan;
  for (RecordId id = 1; id <= 3000; ++id) {
    Point p = grid_point(rng, 3, 12);
    t.insert(id, p);
    scan.add(id, p);
  }
  ASSERT_TRUE(t.validate().empty()) << describe(t.validate());
  expect_oracle_equal(t, scan, rng, 100, 3, 0, 12);
}

TEST(BulkLoad, EmptyAndSingle) {
  auto empty = RPlusTree::bulk_load(TreeConfig{}, std::vector<LeafEntry>{});
  EXPECT_EQ(empty.size(), 0u);
  EXPECT_EQ(empty.root(), nullptr);
  auto one = RPlusTree::bulk_load(TreeConfig{}, std::vector<LeafEntry>{{9, Point{1, 1}}});
  EXPECT_EQ(one.size(), 1u);
  ASSERT_NE(one.root(), nullptr);
  EXPECT_TRUE(one.root()->leaf);
}

TEST(BulkLoad, DuplicateIdsListed) {
  std::vector<LeafEntry> e{{1, Point{0, 0}}, {2, Point{1, 1}}, {1, Point{2, 2}}, {3, Point{0, 1}},
                           {2, Point{3, 3}}};
  try {
    RPlusTree::bulk_load(TreeConfig{}, e);
    FAIL() << "expected DuplicateIdError";
  } catch (const DuplicateIdError& err) {
    EXPECT_EQ(err.ids(), (std::vector<std::uint64_t>{1, 2}));
  }
}

TEST(BulkLoad, HubeiSizedStoreMatchesLinearScan) {
  SyntheticSpec spec;
  spec.count = 22850;
  spec.distribution = SpatialDistribution::kClustered;
  spec.seed = 3;
  auto records = generate_records(spec);
  auto tree = RPlusTree::bulk_load(TreeConfig{}, records);
  EXPECT_EQ(tree.size(), 22850u);
  auto v = tree.validate(ValidateOptions{.check_min_fill = true});
  EXPECT_TRUE(v.empty()) << describe(v);
  auto scan = scan_of(records);
  std::mt19937_64 rng(8);
  expect_oracle_equal(tree, scan, rng, 100, 2, kLatMin, kLatMax);
}

TEST(BulkLoad, MinFillHoldsAcrossSizes) {
  std::mt19937_64 rng(4);
  for (std::size_t m : {4, 5, 8, 16, 64}) {
    for (std::size_t n = 1; n < 700; n += (n < 80 ? 1 : 37)) {
      std::vector<LeafEntry> e;
      for (std::size_t i = 0; i < n; ++i) e.push_back({i, grid_point(rng, 2, 9)});
      auto t = RPlusTree::bulk_load(TreeConfig::with_capacity(m), e);
      auto v = t.validate(ValidateOptions{.check_min_fill = true});
      ASSERT_TRUE(v.empty()) << "M=" << m << " n=" << n << "\n" << describe(v);
    }
  }
}

TEST(BulkLoad, AllIdenticalPoints) {
  std::vector<LeafEntry> e;
  for (RecordId i = 0; i < 5000; ++i) e.push_back({i, Point{1.5, -2.5}});
  auto t = RPlusTree::bulk_load(TreeConfig::with_capacity(8), e);
  auto v = t.validate(ValidateOptions{.check_min_fill = true});
  EXPECT_TRUE(v.empty()) << describe(v);
  EXPECT_EQ(t.range_query(Point{1.5, -2.5}, 0).size(), 5000u);
  auto knn = t.knn_query(Point{0, 0}, 3);
  EXPECT_EQ(knn.size(), 3u);
  EXPECT_EQ(knn[0].record_id, 0u);
  EXPECT_EQ(knn[2].record_id, 2u);
}

TEST(BulkLoad, IsDeterministic) {
  std::mt19937_64 rng(10);
  std::vector<LeafEntry> e;
  for (RecordId i = 0; i < 3000; ++i) e.push_back({i, grid_point(rng, 2, 30)});
  auto a = RPlusTree::bulk_load(TreeConfig{}, e);
  std::reverse(e.begin(), e.end());
  auto b = RPlusTree::bulk_load(TreeConfig{}, e);
  EXPECT_EQ(a.stats(), b.stats());
  EXPECT_EQ(a.entries(), b.entries());
}

// M = 4: five evenly spaced points on the x axis. The admissible cuts leave
// 1|4, 2|3, 3|2 or 4|1 points; every side has zero area, so the imbalance
// tiebreak picks 2|3 or 3|2 at the median.
TEST(SplitNode, CollinearPointsCutAtMedian) {
  const auto config = TreeConfig::with_capacity(4);
  std::vector<LeafEntry> e;
  for (int i = 0; i < 5; ++i) e.push_back({RecordId(i), Point{double(i), 0.0}});
  auto [a, b] = split_node(std::move(*leaf_of(e)), config);
  const std::set<std::size_t> sizes{a->entries.size(), b->entries.size()};
  EXPECT_EQ(sizes, (std::set<std::size_t>{2, 3}));
  const Node& lo = a->region.min()[0] < b->region.min()[0] ? *a : *b;
  const Node& hi = &lo == a.get() ? *b : *a;
  EXPECT_LT(lo.region.max()[0], hi.region.min()[0]);
  EXPECT_FALSE(interiors_overlap(a->region, b->region));
}

TEST(SplitNode, IdenticalLeafPointsBisect) {
  const auto config = TreeConfig::with_capacity(4);
  std::vector<LeafEntry> e;
  for (int i = 0; i < 5; ++i) e.push_back({RecordId(i), Point{2.0, 2.0}});
  auto [a, b] = split_node(std::move(*leaf_of(e)), config);
  EXPECT_EQ(std::set<std::size_t>({a->entries.size(), b->entries.size()}),
            (std::set<std::size_t>{2, 3}));
  EXPECT_EQ(a->region, Rect::of_point(Point{2.0, 2.0}));
  EXPECT_EQ(b->region, Rect::of_point(Point{2.0, 2.0}));
}

// Pinwheel: every axis-parallel line through the interior crosses one of the
// five children, so the split has to cut a child in two.
TEST(SplitNode, InternalSplitCutsStraddlingChild) {
  const auto config = TreeConfig::with_capacity(4);
  const std::vector<std::pair<Point, Point>> boxes{
      {Point{0, 0}, Point{2, 1}}, {Point{2, 0}, Point{3, 2}}, {Point{1, 2}, Point{3, 3}},
      {Point{0, 1}, Point{1, 3}}, {Point{1, 1}, Point{2, 2}}};
  Node parent;
  parent.leaf = false;
  RecordId id = 1;
  for (const auto& [lo, hi] : boxes) {
    parent.children.push_back(leaf_of({{id, lo}, {id + 1, hi}}));
    id += 2;
  }
  parent.recompute_region();
  auto [a, b] = split_node(std::move(parent), config);
  EXPECT_FALSE(interiors_overlap(a->region, b->region));

  std::vector<const Node*> leaves;
  collect_leaves(*a, leaves);
  const std::size_t in_a = leaves.size();
  collect_leaves(*b, leaves);
  std::multiset<RecordId> ids;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    const Rect& side = i < in_a ? a->region : b->region;
    const Rect& other = i < in_a ? b->region : a->region;
    EXPECT_TRUE(side.contains(leaves[i]->region));
    EXPECT_FALSE(interiors_overlap(leaves[i]->region, other));
    for (const auto& e : leaves[i]->entries) ids.insert(e.id);
  }
  EXPECT_EQ(ids.size(), 10u);
  EXPECT_EQ(std::set<RecordId>(ids.begin(), ids.end()).size(), 10u);
  EXPECT_GT(leaves.size(), 5u) << "a straddling child should have been cut";

  Node root;
  root.leaf = false;
  root.children.push_back(std::move(a));
  root.children.push_back(std::move(b));
  root.recompute_region();
  auto tree = RPlusTree::adopt(config, std::make_unique<Node>(std::move(root)), 3);
  EXPECT_TRUE(tree.validate().empty()) << describe(tree.validate());
}

TEST(Queries, EmptyTreeAndEdgeCases) {
  RPlusTree t;
  EXPECT_TRUE(t.range_query(Point{0, 0}, 5).empty());
  EXPECT_TRUE(t.knn_query(Point{0, 0}, 5).empty());
  t.insert(1, Point{1, 1});
  t.insert(2, Point{2, 2});
  t.insert(3, Point{3, 3});
  EXPECT_EQ(t.range_query(Point{2, 2}, 0), std::vector<RecordId>{2});
  EXPECT_TRUE(t.range_query(Point{2.5, 2.5}, 0).empty());
  EXPECT_TRUE(t.knn_query(Point{0, 0}, 0).empty());
  auto all = t.knn_query(Point{0, 0}, 10);
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[0].record_id, 1u);
  EXPECT_EQ(all[2].record_id, 3u);
  EXPECT_THROW(t.range_query(Point{0, 0}, -1), UsageError);
}

TEST(Queries, RandomMatchesLinearScan) {
  std::mt19937_64 rng(99);
  std::vector<Point> pts;
  for (int i = 0; i < 1000; ++i) pts.push_back(i % 2 ? grid_point(rng, 2, 15) : random_point(rng, 2, 0, 15));
  auto recs = records_from(pts);
  auto t = RPlusTree::bulk_load(TreeConfig::with_capacity(8), recs);
  auto scan = scan_of(recs);
  for (int q = 0; q < 50; ++q) {
    Point c = q % 3 == 0 ? pts[rng() % pts.size()] : random_point(rng, 2, -2, 17);
    for (std::uint64_t k : {1, 10, 100}) EXPECT_EQ(t.knn_query(c, k), scan.knn(c, k));
    const double r = std::uniform_real_distribution<double>(0, 6)(rng);
    EXPECT_EQ(t.range_query(c, r), scan.range(c, r));
  }
}

TEST(KnnTieRule, SmallerIdWins) {
  RPlusTree t(TreeConfig::with_capacity(4));
  // Eight records all at distance 1 from the origin.
  const Point ring[] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}, {1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  for (RecordId i = 0; i < 8; ++i) t.insert(100 - i, ring[i]);
  auto got = t.knn_query(Point{0, 0}, 3);
  ASSERT_EQ(got.size(), 3u);
  EXPECT_EQ(got[0].record_id, 93u);
  EXPECT_EQ(got[1].record_id, 94u);
  EXPECT_EQ(got[2].record_id, 95u);
}

TEST(Validate, EmptyTreeIsValid) { EXPECT_TRUE(RPlusTree().validate().empty()); }

TEST(Validate, InflatedChildGivesOneContainmentViolation) {
  std::mt19937_64 rng(6);
  std::vector<LeafEntry> e;
  for (RecordId i = 0; i < 40; ++i) e.push_back({i, random_point(rng, 2)});
  auto t = RPlusTree::bulk_load(TreeConfig::with_capacity(8), e);
  ASSERT_EQ(t.height(), 2u);
  Node* root = t.mutable_root_for_testing();
  // The child touching the root's right edge, pushed further right.
  Node* edge = nullptr;
  for (auto& c : root->children) {
    if (c->region.max()[0] == root->region.max()[0]) edge = c.get();
  }
  ASSERT_NE(edge, nullptr);
  edge->region = Rect(edge->region.min(),
                      Point{edge->region.max()[0] + 5, edge->region.max()[1]});
  auto v = t.validate();
  ASSERT_EQ(v.size(), 1u) << describe(v);
  EXPECT_EQ(v[0].kind, Violation::Kind::kContainment);
}

TEST(Validate, DetectsOverlapAndSizeDrift) {
  auto t = RPlusTree::bulk_load(TreeConfig::with_capacity(4),
                                std::vector<LeafEntry>{{1, Point{0, 0}},
                                                       {2, Point{1, 1}},
                                                       {3, Point{2, 2}},
                                                       {4, Point{3, 3}},
                                                       {5, Point{4, 4}},
                                                       {6, Point{5, 5}}});
  Node* root = t.mutable_root_for_testing();
  ASSERT_FALSE(root->leaf);
  root->children[0]->region = root->region;
  auto v = t.validate();
  EXPECT_TRUE(std::any_of(v.begin(), v.end(),
                          [](const Violation& x) { return x.kind == Violation::Kind::kOverlap; }));
  root->children[0]->entries.pop_back();
  v = t.validate();
  EXPECT_TRUE(std::any_of(v.begin(), v.end(),
                          [](const Violation& x) { return x.kind == Violation::Kind::kSize; }));
}

TEST(Stats, EmptyAndSingleLeaf) {
  EXPECT_EQ(RPlusTree().stats().node_count, 0u);
  EXPECT_EQ(RPlusTree().stats().estimated_bytes, 0u);
  RPlusTree t;
  for (RecordId i = 0; i < 10; ++i) t.insert(i, Point{double(i), 0});
  auto s = t.stats();
  EXPECT_EQ(s.node_count, 1u);
  EXPECT_EQ(s.leaf_count, 1u);
  EXPECT_EQ(s.depth, 1u);
  EXPECT_EQ(s.size, 10u);
  EXPECT_EQ(s.estimated_bytes, node_bytes(2) + 10 * entry_bytes(2));
  EXPECT_EQ(node_bytes(2), 37u);
  EXPECT_EQ(entry_bytes(2), 24u);
}

TEST(Stats, MatchesIndependentTraversal) {
  std::mt19937_64 rng(12);
  std::vector<LeafEntry> e;
  for (RecordId i = 0; i < 10000; ++i) e.push_back({i, random_point(rng, 2)});
  auto t = RPlusTree::bulk_load(TreeConfig{}, e);
  std::size_t nodes = 0, leaves = 0, entries = 0, depth = 0;
  struct Frame {
    const Node* n;
    std::size_t d;
  };
  std::vector<Frame> stack{{t.root(), 1}};
  while (!stack.empty()) {
    auto [n, d] = stack.back();
    stack.pop_back();
    ++nodes;
    depth = std::max(depth, d);
    if (n->leaf) {
      ++leaves;
      entries += n->entries.size();
    } else {
      for (const auto& c : n->children) stack.push_back({c.get(), d + 1});
    }
  }
  auto s = t.stats();
  EXPECT_EQ(s.node_count, nodes);
  EXPECT_EQ(s.leaf_count, leaves);
  EXPECT_EQ(s.depth, depth);
  EXPECT_EQ(s.size, entries);
  EXPECT_EQ(s.estimated_bytes, nodes * 37 + entries * 24);
}

TEST(Copy, IsDeep) {
  RPlusTree a;
  a.insert(1, Point{0, 0});
  RPlusTree b = a;
  b.insert(2, Point{1, 1});
  EXPECT_EQ(a.size(), 1u);
  EXPECT_EQ(b.size(), 2u);
  EXPECT_FALSE(a.contains(2));
}
