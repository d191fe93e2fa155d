#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "caseidx/ingest.hpp"
#include "caseidx/snapshot.hpp"
#include "caseidx/synthetic.hpp"
#include "test_support.hpp"

using namespace caseidx;
using namespace caseidx::testing;

namespace {

ColumnMapping fixture_mapping() { return ColumnMapping::from_config(KvConfig::load(fixture("mapping.cfg"))); }

ColumnMapping latlon() {
  ColumnMapping m;
  m.coord_columns = {"lat", "lon"};
  return m;
}

ParsedCsv parse_text(const std::string& text, const ColumnMapping& m) {
  std::istringstream in(text);
  return parse_csv_stream(in, m);
}

}  // namespace

TEST(KvConfig, ParsesAndRejects) {
  auto c = KvConfig::parse("# c\n a = 1 \n\nb=x, y ,,z\n");
  EXPECT_EQ(c.get_int("a", 0), 1);
  EXPECT_EQ(c.get_list("b"), (std::vector<std::string>{"x", "y", "z"}));
  EXPECT_EQ(c.get_or("missing", "d"), "d");
  EXPECT_THROW(KvConfig::parse("a=1\na=2\n"), UsageError);
  EXPECT_THROW(KvConfig::parse("just words\n"), UsageError);
  EXPECT_THROW(c.require("nope"), UsageError);
}

TEST(ParseCsv, FixtureAcceptsEightRejectsTwo) {
  ParsedCsv p = parse_csv(fixture("cases10.csv"), fixture_mapping());
  EXPECT_EQ(p.report.rows_read, 10u);
  EXPECT_EQ(p.report.rows_accepted, 8u);
  EXPECT_EQ(p.report.rows_rejected, 2u);
  ASSERT_EQ(p.report.rejections.size(), 2u);
  EXPECT_EQ(p.report.rejections[0], (Rejection{6, "missing coordinate"}));
  EXPECT_EQ(p.report.rejections[1], (Rejection{8, "expected 7 fields, found 6"}));
  ASSERT_EQ(p.records.size(), 8u);

  const CaseRecord& first = p.records[0];
  EXPECT_EQ(first.record_id, 101u);
  EXPECT_EQ(first.position, (Point{30.59, 114.30}));
  EXPECT_EQ(first.status, CaseStatus::kConfirmed);
  EXPECT_EQ(first.event_day, 52);  // 2020-01-22 is day 52 after 2019-12-01
  EXPECT_EQ(p.records[1].status, CaseStatus::kDead);
  EXPECT_EQ(p.records[2].status, CaseStatus::kRecovered);
  EXPECT_EQ(p.records[4].record_id, 106u);
  EXPECT_EQ(p.records[4].attributes,
            (std::vector<std::pair<std::string, std::string>>{{"country", "China, Guangdong"},
                                                              {"age", "41"}}));
}

TEST(ParseCsv, HeaderOnly) {
  ParsedCsv p = parse_text("lat,lon\n", latlon());
  EXPECT_TRUE(p.records.empty());
  EXPECT_EQ(p.report.rows_read, 0u);
  EXPECT_EQ(p.report.rows_rejected, 0u);
}

TEST(ParseCsv, BlankLatitudeRejected) {
  ParsedCsv p = parse_text("lat,lon\n,3\n1,2\n", latlon());
  ASSERT_EQ(p.report.rejections.size(), 1u);
  EXPECT_EQ(p.report.rejections[0].reason, "missing coordinate");
  EXPECT_EQ(p.report.rejections[0].line, 2u);
}

TEST(ParseCsv, MissingMappedColumnNamesIt) {
  auto m = ColumnMapping::from_config(KvConfig::load(fixture("mapping_missing_column.cfg")));
  try {
    parse_csv(fixture("cases10.csv"), m);
    FAIL() << "expected UsageError";
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("'lat'"), std::string::npos) << e.what();
  }
}

TEST(ParseCsv, UnreadableFile) {
  EXPECT_THROW(parse_csv("/nonexistent/cases.csv", latlon()), IoError);
}

TEST(ParseCsv, SynthesizedIdsFollowAcceptedRows) {
  ParsedCsv p = parse_text("lat,lon\n1,1\nx,2\n2,2\n3,3\n", latlon());
  ASSERT_EQ(p.records.size(), 3u);
  EXPECT_EQ(p.records[0].record_id, 0u);
  EXPECT_EQ(p.records[1].record_id, 1u);
  EXPECT_EQ(p.records[2].record_id, 2u);
}

TEST(ParseCsv, DialectDetails) {
  ColumnMapping m = latlon();
  m.attribute_columns = {"note"};
  const std::string text =
      "\xEF\xBB\xBFlat,lon,note\r\n"
      "1,2,\"multi\nline\"\r\n"
      "3,4,\"say \"\"hi\"\"\"\r\n"
      "\r\n"
      "5,6,\"never closed\n";
  ParsedCsv p = parse_text(text, m);
  ASSERT_EQ(p.records.size(), 2u);
  EXPECT_EQ(p.records[0].attributes[0].second, "multi\nline");
  EXPECT_EQ(p.records[1].attributes[0].second, "say \"hi\"");
  ASSERT_EQ(p.report.rejections.size(), 1u);
  EXPECT_EQ(p.report.rejections[0].reason, "unterminated quoted field");
  EXPECT_EQ(p.report.rejections[0].line, 6u);
}

TEST(ParseCsv, DuplicateIdsAndBadNumbers) {
  ColumnMapping m = latlon();
  m.id_column = "id";
  ParsedCsv p = parse_text("id,lat,lon\n1,0,0\n1,1,1\nz,2,2\n2,nan,0\n3,1e999,0\n4,abc,0\n", m);
  EXPECT_EQ(p.records.size(), 1u);
  EXPECT_EQ(p.report.rows_rejected, 5u);
  EXPECT_EQ(p.report.rejections[0].reason, "duplicate record_id 1");
}

TEST(ParseCsv, DayCoordinate) {
  ColumnMapping m = latlon();
  m.date_column = "day";
  m.day_coordinate = true;
  m.day_scale = 0.5;
  ParsedCsv p = parse_text("lat,lon,day\n1,2,03.12.2019\n1,2,\n1,2,31.02.2020x\n", m);
  ASSERT_EQ(p.records.size(), 1u);
  EXPECT_EQ(p.records[0].position, (Point{1, 2, 1.0}));
  EXPECT_EQ(p.report.rows_rejected, 2u);
}

// Rejection accounting on adversarial input: random bytes drawn from a
// CSV-heavy alphabet.
TEST(ParseCsv, ReportArithmeticOnGarbage) {
  std::mt19937_64 rng(17);
  const std::string alphabet = "0123456789.,-\"\n\r ae";
  for (int t = 0; t < 500; ++t) {
    std::string text = "lat,lon\n";
    const std::size_t n = rng() % 300;
    for (std::size_t i = 0; i < n; ++i) text.push_back(alphabet[rng() % alphabet.size()]);
    ParsedCsv p = parse_text(text, latlon());
    EXPECT_EQ(p.report.rows_read, p.report.rows_accepted + p.report.rows_rejected);
    EXPECT_EQ(p.report.rows_accepted, p.records.size());
    EXPECT_EQ(p.report.rejections.size(), p.report.rows_rejected);
  }
}

TEST(ParseDay, Formats) {
  EXPECT_EQ(parse_day("01.12.2019", "%d.%m.%Y", "2019-12-01"), 0);
  EXPECT_EQ(parse_day("2020-03-01", "%Y-%m-%d", "2019-12-01"), 91);
  EXPECT_EQ(parse_day("30.11.2019", "%d.%m.%Y", "2019-12-01"), -1);
  EXPECT_FALSE(parse_day("garbage", "%d.%m.%Y", "2019-12-01"));
}

TEST(Mapping, Validation) {
  ColumnMapping m = latlon();
  m.attribute_columns = {"lat"};
  EXPECT_THROW(m.validate(), UsageError);
  m = latlon();
  m.coord_columns = {"a", "b", "c", "d", "e"};
  EXPECT_THROW(m.validate(), UsageError);
  m = latlon();
  m.day_coordinate = true;
  EXPECT_THROW(m.validate(), UsageError);
}

TEST(Partition, ChunkSizes) {
  std::mt19937_64 rng(1);
  std::vector<Point> pts;
  for (int i = 0; i < 10; ++i) pts.push_back(random_point(rng, 2));
  auto parts = partition(records_from(pts), 3);
  ASSERT_EQ(parts.size(), 3u);
  EXPECT_EQ(parts[0].records.size(), 4u);
  EXPECT_EQ(parts[1].records.size(), 3u);
  EXPECT_EQ(parts[2].records.size(), 3u);
  EXPECT_EQ(parts[0].records[0].record_id, 1u);
  EXPECT_EQ(parts[1].records[0].record_id, 5u);
  EXPECT_EQ(parts[2].records[2].record_id, 10u);

  auto one = partition(records_from(pts), 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].records.size(), 10u);
  EXPECT_THROW(partition(records_from(pts), 0), UsageError);
}

TEST(Partition, SpatialTilesAreDisjoint) {
  std::mt19937_64 rng(2);
  std::vector<Point> pts;
  for (int i = 0; i < 1000; ++i) pts.push_back(random_point(rng, 2));
  auto parts = partition(records_from(pts), 4, PartitionStrategy::kSpatial);
  ASSERT_EQ(parts.size(), 4u);
  std::set<RecordId> ids;
  std::vector<Rect> mbrs;
  for (const auto& p : parts) {
    EXPECT_EQ(p.records.size(), 250u);
    Rect r = Rect::of_point(p.records.front().position);
    for (const auto& rec : p.records) {
      EXPECT_TRUE(ids.insert(rec.record_id).second);
      r = rect_union(r, rec.position);
    }
    mbrs.push_back(r);
  }
  EXPECT_EQ(ids.size(), 1000u);
  for (std::size_t i = 0; i < mbrs.size(); ++i) {
    for (std::size_t j = i + 1; j < mbrs.size(); ++j) {
      EXPECT_FALSE(interiors_overlap(mbrs[i], mbrs[j])) << i << " vs " << j;
    }
  }
}

TEST(BuildShards, ConservationAndParallelDeterminism) {
  SyntheticSpec spec;
  spec.count = 20000;
  spec.distribution = SpatialDistribution::kClustered;
  auto records = generate_records(spec);
  for (auto strategy : {PartitionStrategy::kChunk, PartitionStrategy::kSpatial}) {
    auto parts = partition(records, 25, strategy);
    std::size_t total = 0;
    for (const auto& p : parts) total += p.records.size();
    EXPECT_EQ(total, records.size());
    auto seq = build_shards(parts, TreeConfig{}, false);
    auto par = build_shards(parts, TreeConfig{}, true);
    ASSERT_EQ(seq.size(), 25u);
    std::size_t tree_total = 0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      EXPECT_EQ(serialize(seq[i]), serialize(par[i])) << "shard " << i;
      EXPECT_TRUE(seq[i].validate().empty());
      tree_total += seq[i].size();
    }
    EXPECT_EQ(tree_total, records.size());
  }
}

TEST(BuildShards, FullSizeDatasetAcrossTwentyFiveShards) {
  SyntheticSpec spec;
  spec.count = 1446981;
  auto parts = partition(generate_records(spec), 25);
  auto trees = build_shards(parts, TreeConfig::with_capacity(64), true);
  ASSERT_EQ(trees.size(), 25u);
  std::size_t total = 0;
  for (const auto& t : trees) total += t.size();
  EXPECT_EQ(total, 1446981u);
}

TEST(BuildShards, EmptyAndTaggedErrors) {
  EXPECT_TRUE(build_shards({}, TreeConfig{}, true).empty());
  std::vector<Partition> parts(3);
  for (std::size_t i = 0; i < 3; ++i) {
    parts[i].partition_id = i;
    parts[i].records = records_from({Point{double(i), 0}, Point{1, 1}}, 10 * i);
  }
  parts[2].records[1].record_id = parts[2].records[0].record_id;
  try {
    build_shards(parts, TreeConfig{}, true);
    FAIL() << "expected PartitionError";
  } catch (const PartitionError& e) {
    EXPECT_EQ(e.partition_id(), 2u);
  }
}

TEST(WriteShards, NamesFiles) {
  auto dir = scratch_dir("write-shards");
  auto parts = partition(records_from({Point{0, 0}, Point{1, 1}, Point{2, 2}}), 2);
  auto trees = build_shards(parts, TreeConfig{}, false);
  auto paths = write_shards(trees, dir);
  ASSERT_EQ(paths.size(), 2u);
  EXPECT_EQ(paths[0].filename(), "shard-0.idx");
  EXPECT_EQ(paths[1].filename(), "shard-1.idx");
  EXPECT_EQ(read_snapshot(paths[1]).size(), 1u);
}
