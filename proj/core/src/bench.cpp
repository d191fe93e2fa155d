#include "caseidx/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <unordered_set>

#include "caseidx/csv.hpp"
#include "caseidx/linear_scan.hpp"

namespace caseidx {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

struct Dataset {
  std::vector<CaseRecord> records;
  std::size_t dimension = 2;
};

Dataset load(const BenchSpec& spec, std::size_t size, std::uint64_t seed) {
  Dataset d;
  if (spec.dataset) {
    ParsedCsv parsed = parse_csv(*spec.dataset, *spec.mapping);
    d.records = std::move(parsed.records);
    d.dimension = spec.mapping->dimension();
    return d;
  }
  SyntheticSpec s;
  s.count = size;
  s.seed = seed;
  s.distribution = spec.distribution;
  d.records = generate_records(s);
  return d;
}

std::vector<RPlusTree> index_dataset(const BenchSpec& spec, const Dataset& d) {
  auto parts = partition(d.records, spec.n_shards, spec.strategy);
  return build_shards(parts, TreeConfig::with_capacity(spec.max_entries, d.dimension), true);
}

LocalClusterOptions cluster_options(const BenchSpec& spec, std::size_t dimension) {
  LocalClusterOptions o;
  o.fabric = spec.fabric;
  o.coordinator.dimension = dimension;
  o.coordinator.replier.routing = spec.strategy;
  // Large answers travel through the codec; keep the in-process fabric lean.
  o.in_process.serialize = false;
  return o;
}

// Issues the batch twice: a cold pass that is timed and a warm pass that the
// cache answers.
MetricsRow query_batch(LocalCluster& cluster, const std::vector<Query>& batch) {
  MetricsRow row;
  Coordinator& c = cluster.coordinator();
  const CacheStats before = c.cache_stats();
  const auto start = Clock::now();
  std::vector<QueryTicket> tickets;
  tickets.reserve(batch.size());
  for (const auto& q : batch) tickets.push_back(c.submit_query(0, q));
  for (auto& t : tickets) t.result.get();
  row.elapsed_seconds = seconds_since(start);
  for (const auto& q : batch) c.query(0, q);
  const CacheStats after = c.cache_stats();
  row.cache_hits = after.hits - before.hits;
  row.cache_misses = after.misses - before.misses;
  row.queries = batch.size() * 2;
  return row;
}

double accuracy(const std::vector<Neighbor>& answer, const std::vector<Neighbor>& oracle) {
  if (oracle.empty()) return answer.empty() ? 1.0 : 0.0;
  std::unordered_set<RecordId> want;
  for (const auto& n : oracle) want.insert(n.record_id);
  std::size_t hit = 0;
  for (const auto& n : answer) hit += want.contains(n.record_id) ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(oracle.size());
}

}  // namespace

void BenchSpec::validate() const {
  if (!dataset && sizes.empty()) throw UsageError("no dataset sizes");
  for (std::size_t s : sizes) {
    if (s == 0) throw UsageError("dataset sizes must be positive");
  }
  if (dataset && !mapping) throw UsageError("a dataset needs a column mapping");
  if (n_shards == 0) throw UsageError("n_shards must be positive");
  if (repetitions == 0) throw UsageError("repetitions must be positive");
  if (queries == 0) throw UsageError("queries must be positive");
  if (accuracy_size == 0) throw UsageError("accuracy_size must be positive");
  if (!(radius_min > 0.0) || !(radius_max >= radius_min) || !std::isfinite(radius_max)) {
    throw UsageError("radius ladder needs 0 < min <= max");
  }
  if (radius_steps == 0) throw UsageError("radius_steps must be positive");
  TreeConfig::with_capacity(max_entries).validate();
  for (const auto& e : experiments) {
    if (e != kExpIndex && e != kExpKnn && e != kExpRange && e != kExpSpace && e != kExpAccuracy) {
      throw UsageError("unknown experiment '" + e + "'");
    }
    if (e == kExpKnn && k_values.empty()) throw UsageError("k list is empty");
  }
}

std::vector<double> BenchSpec::radii() const {
  std::vector<double> out;
  if (radius_steps == 1) return {radius_min};
  const double ratio = std::log(radius_max / radius_min) / static_cast<double>(radius_steps - 1);
  for (std::size_t i = 0; i < radius_steps; ++i) {
    out.push_back(i + 1 == radius_steps ? radius_max
                                        : radius_min * std::exp(ratio * static_cast<double>(i)));
  }
  return out;
}

std::vector<MetricsRow> run_bench(const BenchSpec& spec, std::ostream* log) {
  spec.validate();
  auto wants = [&](const char* e) {
    return std::find(spec.experiments.begin(), spec.experiments.end(), e) != spec.experiments.end();
  };
  std::vector<std::size_t> sizes = spec.dataset ? std::vector<std::size_t>{0} : spec.sizes;
  std::vector<MetricsRow> rows;

  for (std::size_t run = 0; run < spec.repetitions; ++run) {
    for (std::size_t size : sizes) {
      const Dataset data = load(spec, size, spec.seed + size);
      const std::size_t n = data.records.size();
      auto base = [&](const char* exp, const char* pname, double param) {
        MetricsRow r;
        r.experiment = exp;
        r.run = run;
        r.parameter_name = pname;
        r.parameter = param;
        r.dataset_size = n;
        r.n_shards = spec.n_shards;
        return r;
      };

      const auto start = Clock::now();
      std::vector<RPlusTree> trees = index_dataset(spec, data);
      const double index_seconds = seconds_since(start);
      if (wants(kExpIndex)) {
        MetricsRow r = base(kExpIndex, "dataset_size", static_cast<double>(n));
        r.elapsed_seconds = index_seconds;
        rows.push_back(r);
      }
      if (wants(kExpSpace)) {
        MetricsRow r = base(kExpSpace, "dataset_size", static_cast<double>(n));
        std::size_t bytes = 0;
        for (const auto& t : trees) bytes += t.stats().estimated_bytes;
        r.space_bytes = bytes;
        r.elapsed_seconds = index_seconds;
        rows.push_back(r);
      }
      if (log) *log << "run " << run << " size " << n << " indexed in " << index_seconds << " s\n";
      if (!wants(kExpKnn) && !wants(kExpRange)) continue;

      LocalCluster cluster(std::move(trees), cluster_options(spec, data.dimension));
      const auto centers = generate_centers(data.records, spec.queries, spec.seed + run, data.dimension);
      if (wants(kExpKnn)) {
        for (std::uint64_t k : spec.k_values) {
          std::vector<Query> batch;
          for (const auto& c : centers) batch.push_back(KnnQuery{c, k});
          MetricsRow r = query_batch(cluster, batch);
          MetricsRow b = base(kExpKnn, "k", static_cast<double>(k));
          b.elapsed_seconds = r.elapsed_seconds;
          b.cache_hits = r.cache_hits;
          b.cache_misses = r.cache_misses;
          b.queries = r.queries;
          rows.push_back(b);
        }
      }
      if (wants(kExpRange)) {
        for (double radius : spec.radii()) {
          std::vector<Query> batch;
          for (const auto& c : centers) batch.push_back(RangeQuery{c, radius});
          MetricsRow r = query_batch(cluster, batch);
          MetricsRow b = base(kExpRange, "radius", radius);
          b.elapsed_seconds = r.elapsed_seconds;
          b.cache_hits = r.cache_hits;
          b.cache_misses = r.cache_misses;
          b.queries = r.queries;
          rows.push_back(b);
        }
      }
    }

    if (wants(kExpAccuracy)) {
      const Dataset data = load(spec, spec.accuracy_size, spec.seed + spec.accuracy_size);
      std::vector<RPlusTree> trees = index_dataset(spec, data);
      LinearScan oracle;
      for (const auto& r : data.records) oracle.add(r.record_id, r.position);
      LocalCluster cluster(std::move(trees), cluster_options(spec, data.dimension));
      const auto centers =
          generate_centers(data.records, spec.queries, spec.seed + 7919 + run, data.dimension);
      MetricsRow row;
      row.experiment = kExpAccuracy;
      row.run = run;
      row.parameter_name = "k";
      row.parameter = static_cast<double>(spec.accuracy_k);
      row.dataset_size = data.records.size();
      row.n_shards = spec.n_shards;
      double sum = 0.0;
      const CacheStats before = cluster.coordinator().cache_stats();
      const auto start = Clock::now();
      for (const auto& c : centers) {
        QueryResult got = cluster.coordinator().query(0, KnnQuery{c, spec.accuracy_k});
        sum += got.degraded ? 0.0 : accuracy(got.neighbors, oracle.knn(c, spec.accuracy_k));
      }
      row.elapsed_seconds = seconds_since(start);
      const CacheStats after = cluster.coordinator().cache_stats();
      row.cache_hits = after.hits - before.hits;
      row.cache_misses = after.misses - before.misses;
      row.queries = centers.size();
      row.accuracy = sum / static_cast<double>(centers.size());
      rows.push_back(row);
      if (log) *log << "run " << run << " accuracy " << *row.accuracy << "\n";
    }
  }
  return rows;
}

void write_metrics(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << kMetricsHeader << '\n';
  for (const auto& r : rows) {
    out << r.experiment << ',' << r.run << ',' << r.parameter_name << ',' << fmt_double(r.parameter)
        << ',' << r.dataset_size << ',' << r.n_shards << ',' << fmt_double(r.elapsed_seconds) << ','
        << (r.space_bytes ? std::to_string(*r.space_bytes) : std::string()) << ','
        << (r.accuracy ? fmt_double(*r.accuracy) : std::string()) << ',' << r.cache_hits << ','
        << r.cache_misses << ',' << r.queries << '\n';
  }
}

void write_metrics(const std::filesystem::path& path, const std::vector<MetricsRow>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_metrics(out, rows);
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<MetricsRow> read_metrics(std::istream& in) {
  CsvReader reader(in);
  CsvRow row;
  std::string joined;
  if (reader.next(row)) {
    for (std::size_t i = 0; i < row.fields.size(); ++i) {
      joined += (i ? "," : "") + row.fields[i];
    }
  }
  if (joined != kMetricsHeader) throw UsageError("not a metrics file: unexpected header");
  std::vector<MetricsRow> rows;
  while (reader.next(row)) {
    const auto& f = row.fields;
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() != 12) {
      throw UsageError("metrics line " + std::to_string(row.line) + ": expected 12 fields");
    }
    try {
      MetricsRow r;
      r.experiment = f[0];
      r.run = std::stoull(f[1]);
      r.parameter_name = f[2];
      r.parameter = std::stod(f[3]);
      r.dataset_size = std::stoull(f[4]);
      r.n_shards = std::stoull(f[5]);
      r.elapsed_seconds = std::stod(f[6]);
      if (!f[7].empty()) r.space_bytes = std::stoull(f[7]);
      if (!f[8].empty()) r.accuracy = std::stod(f[8]);
      r.cache_hits = std::stoull(f[9]);
      r.cache_misses = std::stoull(f[10]);
      r.queries = std::stoull(f[11]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw UsageError("metrics line " + std::to_string(row.line) + ": bad number");
    }
  }
  return rows;
}

}  // namespace caseidx
