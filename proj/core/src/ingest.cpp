#include "caseidx/ingest.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "caseidx/csv.hpp"
#include "caseidx/snapshot.hpp"

namespace caseidx {

namespace {

std::optional<double> parse_number(std::string_view text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  double v = 0;
  const char* first = t.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

std::optional<std::chrono::sys_days> parse_ymd(const std::string& text, const std::string& format) {
  std::tm tm{};
  std::istringstream in(text);
  in >> std::get_time(&tm, format.c_str());
  if (in.fail()) return std::nullopt;
  in >> std::ws;
  if (!in.eof()) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year(tm.tm_year + 1900),
                                        std::chrono::month(static_cast<unsigned>(tm.tm_mon + 1)),
                                        std::chrono::day(static_cast<unsigned>(tm.tm_mday))};
  if (!ymd.ok()) return std::nullopt;
  return std::chrono::sys_days(ymd);
}

struct ResolvedColumns {
  std::optional<std::size_t> id;
  std::vector<std::size_t> coords;
  std::optional<std::size_t> status;
  std::optional<std::size_t> date;
  std::vector<std::size_t> attributes;
};

ResolvedColumns resolve(const std::vector<std::string>& header, const ColumnMapping& m) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header.size(); ++i) index.emplace(trim(header[i]), i);
  auto find = [&](const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) throw UsageError("mapped column '" + name + "' not found in header");
    return it->second;
  };
  ResolvedColumns r;
  if (m.id_column != ColumnMapping::kSynthesize) r.id = find(m.id_column);
  for (const auto& c : m.coord_columns) r.coords.push_back(find(c));
  if (m.status_column) r.status = find(*m.status_column);
  if (m.date_column) r.date = find(*m.date_column);
  for (const auto& c : m.attribute_columns) r.attributes.push_back(find(c));
  return r;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

ColumnMapping ColumnMapping::from_config(const KvConfig& config) {
  ColumnMapping m;
  m.id_column = config.get_or("id_column", kSynthesize);
  m.coord_columns = config.get_list("coord_columns");
  if (m.coord_columns.empty()) throw UsageError("mapping: coord_columns is required");
  if (auto s = config.get("status_column"); s && !s->empty()) m.status_column = *s;
  for (const auto& pair : config.get_list("status_map")) {
    const auto colon = pair.rfind(':');
    if (colon == std::string::npos) throw UsageError("mapping: status_map item '" + pair + "'");
    auto status = parse_status(trim(pair.substr(colon + 1)));
    if (!status) throw UsageError("mapping: unknown status in '" + pair + "'");
    m.status_map[lower(trim(pair.substr(0, colon)))] = *status;
  }
  if (auto s = config.get("date_column"); s && !s->empty()) m.date_column = *s;
  m.date_format = config.get_or("date_format", m.date_format);
  m.epoch = config.get_or("epoch", m.epoch);
  m.day_coordinate = config.get_bool("day_coordinate", false);
  m.day_scale = config.get_double("day_scale", 1.0);
  m.attribute_columns = config.get_list("attribute_columns");
  m.validate();
  return m;
}

void ColumnMapping::validate() const {
  if (dimension() < 1 || dimension() > kMaxDimensions) {
    throw UsageError("mapping: dimension " + std::to_string(dimension()) + " outside [1, " +
                     std::to_string(kMaxDimensions) + "]");
  }
  if (day_coordinate && !date_column) {
    throw UsageError("mapping: day_coordinate requires date_column");
  }
  if (!std::isfinite(day_scale)) throw UsageError("mapping: day_scale is not finite");
  std::unordered_set<std::string> seen;
  auto add = [&](const std::string& name) {
    if (!seen.insert(name).second) throw UsageError("mapping: column '" + name + "' used twice");
  };
  if (id_column != kSynthesize) add(id_column);
  for (const auto& c : coord_columns) add(c);
  if (status_column) add(*status_column);
  if (date_column) add(*date_column);
  for (const auto& c : attribute_columns) add(c);
  if (!parse_ymd(epoch, "%Y-%m-%d")) throw UsageError("mapping: bad epoch '" + epoch + "'");
}

std::optional<std::int32_t> parse_day(const std::string& text, const std::string& format,
                                      const std::string& epoch) {
  const auto day = parse_ymd(trim(text), format);
  const auto base = parse_ymd(epoch, "%Y-%m-%d");
  if (!day || !base) return std::nullopt;
  return static_cast<std::int32_t>((*day - *base).count());
}

ParsedCsv parse_csv(const std::filesystem::path& path, const ColumnMapping& mapping) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_csv_stream(in, mapping);
}

ParsedCsv parse_csv_stream(std::istream& in, const ColumnMapping& mapping) {
  const auto started = std::chrono::steady_clock::now();
  mapping.validate();

  ParsedCsv out;
  CsvReader reader(in);
  CsvRow row;
  if (!reader.next(row)) throw UsageError("input has no header row");
  const std::size_t width = row.fields.size();
  const ResolvedColumns cols = resolve(row.fields, mapping);
  const std::size_t d = mapping.dimension();

  std::unordered_set<RecordId> seen_ids;
  RecordId next_id = 0;
  auto& report = out.report;
  auto reject = [&](std::size_t line, std::string reason) {
    ++report.rows_rejected;
    report.rejections.push_back({line, std::move(reason)});
  };

  while (reader.next(row)) {
    if (row.fields.size() == 1 && trim(row.fields[0]).empty()) continue;  // blank line
    ++report.rows_read;
    const std::size_t line = row.line;

    if (row.unterminated_quote) {
      reject(line, "unterminated quoted field");
      continue;
    }
    if (row.fields.size() != width) {
      reject(line, "expected " + std::to_string(width) + " fields, found " +
                       std::to_string(row.fields.size()));
      continue;
    }

    CaseRecord rec;
    if (cols.id) {
      const std::string text = trim(row.fields[*cols.id]);
      std::uint64_t id = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), id);
      if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
        reject(line, "unparseable record id '" + text + "'");
        continue;
      }
      rec.record_id = id;
      if (seen_ids.contains(id)) {
        reject(line, "duplicate record_id " + std::to_string(id));
        continue;
      }
    }

    std::array<double, kMaxDimensions> coords{};
    std::optional<std::string> problem;
    for (std::size_t i = 0; i < cols.coords.size() && !problem; ++i) {
      const std::string& raw = row.fields[cols.coords[i]];
      if (trim(raw).empty()) {
        problem = "missing coordinate";
      } else if (auto v = parse_number(raw); !v) {
        problem = "unparseable coordinate '" + trim(raw) + "' in column " + mapping.coord_columns[i];
      } else if (!std::isfinite(*v)) {
        problem = "non-finite coordinate in column " + mapping.coord_columns[i];
      } else {
        coords[i] = *v;
      }
    }

    if (!problem && cols.date) {
      const std::string raw = trim(row.fields[*cols.date]);
      if (!raw.empty()) rec.event_day = parse_day(raw, mapping.date_format, mapping.epoch);
      if (mapping.day_coordinate) {
        if (!rec.event_day) {
          problem = raw.empty() ? "missing coordinate" : "unparseable date '" + raw + "'";
        } else {
          coords[cols.coords.size()] = *rec.event_day * mapping.day_scale;
        }
      }
    }
    if (problem) {
      reject(line, *problem);
      continue;
    }
    if (cols.id) {
      seen_ids.insert(rec.record_id);
    } else {
      rec.record_id = next_id++;
    }
    rec.position = Point(std::span<const double>(coords.data(), d));

    if (cols.status) {
      const std::string raw = lower(trim(row.fields[*cols.status]));
      if (auto it = mapping.status_map.find(raw); it != mapping.status_map.end()) {
        rec.status = it->second;
      } else {
        rec.status = parse_status(raw).value_or(CaseStatus::kUnknown);
      }
    }
    for (std::size_t i = 0; i < cols.attributes.size(); ++i) {
      rec.attributes.emplace_back(mapping.attribute_columns[i], row.fields[cols.attributes[i]]);
    }
    out.records.push_back(std::move(rec));
    ++report.rows_accepted;
  }
  report.duration_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

std::string_view to_string(PartitionStrategy s) noexcept {
  return s == PartitionStrategy::kChunk ? "chunk" : "spatial";
}

PartitionStrategy parse_strategy(std::string_view text) {
  if (text == "chunk") return PartitionStrategy::kChunk;
  if (text == "spatial") return PartitionStrategy::kSpatial;
  throw UsageError("unknown partition strategy '" + std::string(text) + "'");
}

std::vector<Partition> partition(std::vector<CaseRecord> records, std::size_t n_shards,
                                 PartitionStrategy strategy) {
  if (n_shards < 1) throw UsageError("n_shards must be >= 1");
  const std::size_t n = records.size();
  std::vector<std::size_t> sizes(n_shards);
  for (std::size_t i = 0; i < n_shards; ++i) sizes[i] = n / n_shards + (i < n % n_shards ? 1 : 0);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  if (strategy == PartitionStrategy::kSpatial && n > 0) {
    std::vector<LeafEntry> entries;
    entries.reserve(n);
    const std::size_t d = records.front().position.dimension();
    for (std::size_t i = 0; i < n; ++i) {
      require_same_dimension(records[i].position.dimension(), d);
      entries.push_back({i, records[i].position});
    }
    str_tile(entries, sizes, d);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::size_t>(entries[i].id);
  }

  std::vector<Partition> parts(n_shards);
  std::size_t cursor = 0;
  for (std::size_t p = 0; p < n_shards; ++p) {
    parts[p].partition_id = p;
    parts[p].records.reserve(sizes[p]);
    for (std::size_t j = 0; j < sizes[p]; ++j) {
      parts[p].records.push_back(std::move(records[order[cursor++]]));
    }
  }
  return parts;
}

std::vector<RPlusTree> build_shards(std::span<const Partition> partitions,
                                    const TreeConfig& config, bool parallel) {
  config.validate();
  std::vector<RPlusTree> trees(partitions.size(), RPlusTree(config));
  auto build_one = [&](std::size_t i) {
    try {
      trees[i] = RPlusTree::bulk_load(config, partitions[i].records);
    } catch (const Error& e) {
      throw PartitionError(partitions[i].partition_id, e.what());
    }
  };

  if (!parallel || partitions.size() < 2) {
    for (std::size_t i = 0; i < partitions.size(); ++i) build_one(i);
    return trees;
  }

  const std::size_t workers = std::min<std::size_t>(
      partitions.size(), std::max(2U, std::thread::hardware_concurrency()));
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::size_t first_error_index = partitions.size();
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < partitions.size(); i = next++) {
          try {
            build_one(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (i < first_error_index) {
              first_error_index = i;
              first_error = std::current_exception();
            }
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  return trees;
}

std::filesystem::path shard_file_name(std::size_t shard_id) {
  return "shard-" + std::to_string(shard_id) + ".idx";
}

std::vector<std::filesystem::path> write_shards(std::span<const RPlusTree> trees,
                                                const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> paths;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    paths.push_back(dir / shard_file_name(i));
    write_snapshot(trees[i], paths.back());
  }
  return paths;
}

}  // namespace caseidx
