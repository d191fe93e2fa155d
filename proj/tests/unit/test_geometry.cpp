#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "caseidx/error.hpp"
#include "caseidx/geometry.hpp"
#include "caseidx/record.hpp"
#include "test_support.hpp"

using namespace caseidx;
using caseidx::testing::random_point;

TEST(Point, RejectsNonFiniteAndBadDimension) {
  EXPECT_THROW(Point({std::nan("")}), UsageError);
  EXPECT_THROW(Point({1.0, std::numeric_limits<double>::infinity()}), UsageError);
  EXPECT_THROW(Point(std::span<const double>{}), DimensionError);
  EXPECT_THROW(Point({1, 2, 3, 4, 5}), DimensionError);
  EXPECT_EQ(Point({1, 2, 3, 4}).dimension(), 4u);
}

TEST(Rect, RejectsInvertedBounds) {
  EXPECT_THROW(Rect(Point{1, 0}, Point{0, 1}), UsageError);
  EXPECT_NO_THROW(Rect(Point{1, 1}, Point{1, 1}));
  EXPECT_THROW(Rect(Point{0, 0}, Point{1, 1, 1}), DimensionError);
}

TEST(Distance, Examples) {
  EXPECT_EQ(distance(Point{0, 0}, Point{0, 0}), 0.0);
  EXPECT_EQ(distance(Point{0, 0}, Point{3, 4}), 5.0);
  // sqrt(3.6^2 + 5.8^2) = sqrt(46.6), computed offline.
  EXPECT_NEAR(distance(Point{1.2, -0.7}, Point{-2.4, 5.1}), 6.826419266350404, 1e-12);
  EXPECT_THROW(distance(Point{0, 0}, Point{0, 0, 0}), DimensionError);
}

TEST(Distance, MetricProperties) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    const std::size_t d = 1 + i % 4;
    Point a = random_point(rng, d, -50, 50);
    Point b = random_point(rng, d, -50, 50);
    Point c = random_point(rng, d, -50, 50);
    EXPECT_GE(distance(a, b), 0.0);
    EXPECT_EQ(distance(a, b), distance(b, a));
    EXPECT_EQ(distance(a, a), 0.0);
    EXPECT_LE(distance(a, c), distance(a, b) + distance(b, c) + 1e-9);
  }
}

TEST(Mindist, Examples) {
  EXPECT_EQ(mindist(Point{0, 0}, Rect(Point{-1, -1}, Point{1, 1})), 0.0);
  EXPECT_EQ(mindist(Point{3, 0}, Rect(Point{0, -1}, Point{1, 1})), 2.0);
  EXPECT_THROW(mindist(Point{0, 0, 0}, Rect(Point{0, 0}, Point{1, 1})), DimensionError);
}

// Grid-sampling oracle: the minimum over a dense lattice of the box, which
// includes the box corners and faces, bounds mindist from above and comes
// within the lattice spacing of it.
TEST(Mindist, MatchesGridSample) {
  std::mt19937_64 rng(5);
  constexpr int kSteps = 200;
  for (int t = 0; t < 50; ++t) {
    Point a = random_point(rng, 2, -10, 10);
    Point b = random_point(rng, 2, -10, 10);
    Rect r(Point{std::min(a[0], b[0]), std::min(a[1], b[1])},
           Point{std::max(a[0], b[0]), std::max(a[1], b[1])});
    Point p = random_point(rng, 2, -20, 20);
    // Sample the lattice plus p's clamp onto each axis so the exact minimiser
    // is always among the samples.
    std::vector<double> xs, ys;
    for (int i = 0; i <= kSteps; ++i) {
      xs.push_back(r.min()[0] + (r.max()[0] - r.min()[0]) * i / kSteps);
      ys.push_back(r.min()[1] + (r.max()[1] - r.min()[1]) * i / kSteps);
    }
    xs.push_back(std::clamp(p[0], r.min()[0], r.max()[0]));
    ys.push_back(std::clamp(p[1], r.min()[1], r.max()[1]));
    double best = std::numeric_limits<double>::infinity();
    for (double x : xs) {
      for (double y : ys) best = std::min(best, std::hypot(p[0] - x, p[1] - y));
    }
    EXPECT_NEAR(mindist(p, r), best, 1e-9);
  }
}

TEST(Mindist, LowerBoundsDistanceToContents) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 200; ++t) {
    Rect r(Point{0, 0, 0}, Point{1 + 3 * u(rng), 1 + 3 * u(rng), 1 + 3 * u(rng)});
    Point p = random_point(rng, 3, -5, 8);
    for (int s = 0; s < 20; ++s) {
      Point q{r.max()[0] * u(rng), r.max()[1] * u(rng), r.max()[2] * u(rng)};
      EXPECT_LE(mindist(p, r), distance(p, q) + 1e-12);
    }
  }
}

TEST(RectIntersects, ClosedBoxes) {
  Rect a(Point{0, 0}, Point{1, 1});
  EXPECT_TRUE(rect_intersects(a, a));
  EXPECT_FALSE(rect_intersects(a, Rect(Point{2, 2}, Point{3, 3})));
  EXPECT_TRUE(rect_intersects(a, Rect(Point{1, 1}, Point{2, 2})));
  EXPECT_THROW(rect_intersects(a, Rect(Point{0}, Point{1})), DimensionError);
}

TEST(RectIntersects, Symmetric) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 500; ++t) {
    Point a = random_point(rng, 2, 0, 10), b = random_point(rng, 2, 0, 10);
    Point c = random_point(rng, 2, 0, 10), d = random_point(rng, 2, 0, 10);
    Rect r1(Point{std::min(a[0], b[0]), std::min(a[1], b[1])},
            Point{std::max(a[0], b[0]), std::max(a[1], b[1])});
    Rect r2(Point{std::min(c[0], d[0]), std::min(c[1], d[1])},
            Point{std::max(c[0], d[0]), std::max(c[1], d[1])});
    EXPECT_EQ(rect_intersects(r1, r2), rect_intersects(r2, r1));
    EXPECT_TRUE(rect_intersects(rect_union(r1, r2), r1));
    EXPECT_TRUE(rect_intersects(rect_union(r1, r2), r2));
  }
}

TEST(RectUnion, Examples) {
  Rect a(Point{0, 0}, Point{1, 1});
  EXPECT_EQ(rect_union(a, a), a);
  EXPECT_EQ(rect_union(a, Rect(Point{2, 2}, Point{3, 3})), Rect(Point{0, 0}, Point{3, 3}));
  EXPECT_THROW(rect_union(a, Rect(Point{0}, Point{1})), DimensionError);
}

TEST(RectUnion, ComponentwiseOracle) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 500; ++t) {
    const std::size_t d = 1 + t % 4;
    Point a = random_point(rng, d), b = random_point(rng, d);
    Point c = random_point(rng, d), e = random_point(rng, d);
    std::vector<double> lo1(d), hi1(d), lo2(d), hi2(d), lo(d), hi(d);
    for (std::size_t i = 0; i < d; ++i) {
      lo1[i] = std::min(a[i], b[i]);
      hi1[i] = std::max(a[i], b[i]);
      lo2[i] = std::min(c[i], e[i]);
      hi2[i] = std::max(c[i], e[i]);
      lo[i] = std::min(lo1[i], lo2[i]);
      hi[i] = std::max(hi1[i], hi2[i]);
    }
    Rect r1{Point(lo1), Point(hi1)}, r2{Point(lo2), Point(hi2)};
    Rect u = rect_union(r1, r2);
    EXPECT_EQ(u, Rect(Point(lo), Point(hi)));
    EXPECT_EQ(u, rect_union(r2, r1));
    EXPECT_TRUE(u.contains(r1));
    EXPECT_TRUE(u.contains(r2));
  }
}

TEST(InteriorsOverlap, SharedFaceIsNotOverlap) {
  Rect a(Point{0, 0}, Point{1, 1});
  EXPECT_FALSE(interiors_overlap(a, Rect(Point{1, 0}, Point{2, 1})));
  EXPECT_TRUE(interiors_overlap(a, Rect(Point{0.5, 0.5}, Point{2, 2})));
  EXPECT_FALSE(interiors_overlap(Rect::of_point(Point{0.5, 0.5}), a));
}

TEST(Query, Validation) {
  EXPECT_THROW(validate_query(RangeQuery{Point{0, 0}, -1.0}), UsageError);
  EXPECT_THROW(validate_query(RangeQuery{Point{0, 0}, std::nan("")}), UsageError);
  EXPECT_THROW(validate_query(KnnQuery{Point{}, 3}), UsageError);
  EXPECT_NO_THROW(validate_query(KnnQuery{Point{0, 0}, 0}));
}

TEST(QueryId, PacksClientAndSequence) {
  const QueryId a = make_query_id(7, 1), b = make_query_id(7, 2);
  EXPECT_LT(a, b);
  EXPECT_EQ(query_client(a), 7u);
  EXPECT_NE(make_query_id(7, 1), make_query_id(8, 1));
}

TEST(Status, RoundTrip) {
  for (int s = 0; s <= 4; ++s) {
    auto st = static_cast<CaseStatus>(s);
    EXPECT_EQ(parse_status(to_string(st)), st);
  }
  EXPECT_FALSE(parse_status("zombie"));
}
