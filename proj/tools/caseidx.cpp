// caseidx: ingest, query, bench, stats and serve.
//
// Exit codes: 0 ok, 1 runtime failure, 2 usage or configuration error.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <unistd.h>

#include "CLI11.hpp"
#include "caseidx/bench.hpp"
#include "caseidx/cluster.hpp"
#include "caseidx/error.hpp"
#include "caseidx/ingest.hpp"
#include "caseidx/kv_config.hpp"
#include "caseidx/snapshot.hpp"
#include "caseidx/socket_fabric.hpp"
#include "caseidx/synthetic.hpp"

namespace fs = std::filesystem;
using namespace caseidx;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

constexpr const char* kManifestName = "manifest.cfg";

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

Point parse_center(const std::string& text) {
  std::vector<double> coords;
  for (const auto& item : split_list(text)) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw UsageError("bad coordinate '" + item + "' in --center");
    coords.push_back(v);
  }
  if (coords.empty() || coords.size() > kMaxDimensions) {
    throw UsageError("--center needs 1 to " + std::to_string(kMaxDimensions) + " coordinates");
  }
  return Point(coords);
}

// Shard snapshots in a directory, ordered by shard id.
std::map<std::size_t, fs::path> find_snapshots(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw UsageError("no such directory: " + dir.string());
  std::map<std::size_t, fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("shard-", 0) != 0 || entry.path().extension() != ".idx") continue;
    const std::string digits = name.substr(6, name.size() - 6 - 4);
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) continue;
    out[std::stoul(digits)] = entry.path();
  }
  return out;
}

std::vector<RPlusTree> load_shards(const fs::path& dir) {
  std::vector<RPlusTree> trees;
  std::size_t expect = 0;
  for (const auto& [id, path] : find_snapshots(dir)) {
    if (id != expect++) throw UsageError("shard ids in " + dir.string() + " are not contiguous");
    trees.push_back(read_snapshot(path));
  }
  return trees;
}

// ---------------------------------------------------------------------------
// ingest

struct IngestArgs {
  std::string input;
  std::string mapping;
  std::string id_column;
  std::string coord_columns;
  std::size_t synthetic = 0;
  std::uint64_t seed = 1;
  std::string distribution = "clustered";
  std::size_t dimension = 2;
  std::size_t shards = kDefaultShards;
  std::string strategy = "chunk";
  std::size_t max_entries = 64;
  bool serial = false;
  std::string out;
  std::string name;
};

int cmd_ingest(const IngestArgs& a) {
  if (a.input.empty() == (a.synthetic == 0)) {
    throw UsageError("give exactly one of --input or --synthetic");
  }
  if (a.shards == 0) throw UsageError("--shards must be positive");
  const PartitionStrategy strategy = parse_strategy(a.strategy);
  const auto start = Clock::now();

  std::vector<CaseRecord> records;
  IngestReport report;
  std::size_t dimension = a.dimension;
  std::string dataset = a.name;
  if (!a.input.empty()) {
    ColumnMapping mapping;
    if (!a.mapping.empty()) mapping = ColumnMapping::from_config(KvConfig::load(a.mapping));
    if (!a.id_column.empty()) mapping.id_column = a.id_column;
    if (!a.coord_columns.empty()) mapping.coord_columns = split_list(a.coord_columns);
    mapping.validate();
    ParsedCsv parsed = parse_csv(a.input, mapping);
    records = std::move(parsed.records);
    report = std::move(parsed.report);
    dimension = mapping.dimension();
    if (dataset.empty()) dataset = fs::path(a.input).stem().string();
  } else {
    SyntheticSpec spec;
    spec.count = a.synthetic;
    spec.seed = a.seed;
    spec.distribution = parse_distribution(a.distribution);
    spec.dimension = a.dimension;
    records = generate_records(spec);
    report.rows_read = report.rows_accepted = records.size();
    if (dataset.empty()) dataset = "synthetic-" + std::to_string(a.synthetic);
  }
  const double parse_seconds = seconds_since(start);

  const TreeConfig config = TreeConfig::with_capacity(a.max_entries, dimension);
  const auto build_start = Clock::now();
  const auto parts = partition(std::move(records), a.shards, strategy);
  const auto trees = build_shards(parts, config, !a.serial);
  const double build_seconds = seconds_since(build_start);

  fs::create_directories(a.out);
  for (const auto& [id, path] : find_snapshots(a.out)) fs::remove(path);
  write_shards(trees, a.out);

  KvConfig manifest;
  manifest.set("dataset", dataset);
  manifest.set("rows_read", std::to_string(report.rows_read));
  manifest.set("rows_accepted", std::to_string(report.rows_accepted));
  manifest.set("rows_rejected", std::to_string(report.rows_rejected));
  manifest.set("n_shards", std::to_string(trees.size()));
  manifest.set("strategy", std::string(to_string(strategy)));
  manifest.set("max_entries", std::to_string(a.max_entries));
  manifest.set("dimension", std::to_string(dimension));
  manifest.set("parse_seconds", fixed(parse_seconds));
  manifest.set("build_seconds", fixed(build_seconds));
  for (std::size_t i = 0; i < trees.size(); ++i) {
    manifest.set("shard." + std::to_string(i) + ".records", std::to_string(trees[i].size()));
  }
  std::ofstream(fs::path(a.out) / kManifestName) << manifest.to_string();

  for (const auto& r : report.rejections) {
    std::cerr << "rejected line " << r.line << ": " << r.reason << "\n";
  }
  std::cout << "ingested " << report.rows_accepted << " of " << report.rows_read << " rows into "
            << trees.size() << " shards (" << report.rows_rejected << " rejected), build "
            << fixed(build_seconds, 3) << " s\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// query

struct QueryArgs {
  std::string kind;
  std::string center;
  std::uint64_t k = 0;
  double radius = -1.0;
  std::string data;
  std::string connect;
  std::size_t repeat = 1;
  std::uint32_t client = 1;
  long timeout_ms = 5000;
  std::size_t limit = 20;
};

void print_result(const QueryResult& r, double elapsed, std::size_t limit) {
  if (r.kind == QueryKind::kKnn) {
    std::printf("%-6s %-12s %s\n", "rank", "record_id", "distance");
    for (std::size_t i = 0; i < r.neighbors.size() && i < limit; ++i) {
      std::printf("%-6zu %-12llu %.6f\n", i + 1,
                  static_cast<unsigned long long>(r.neighbors[i].record_id),
                  r.neighbors[i].distance);
    }
  } else {
    std::printf("%-6s %s\n", "rank", "record_id");
    for (std::size_t i = 0; i < r.ids.size() && i < limit; ++i) {
      std::printf("%-6zu %llu\n", i + 1, static_cast<unsigned long long>(r.ids[i]));
    }
  }
  const std::size_t hits = r.kind == QueryKind::kKnn ? r.neighbors.size() : r.ids.size();
  if (hits > limit) std::printf("... %zu more\n", hits - limit);
  if (r.degraded) {
    std::string missing;
    for (NodeId n : r.missing_nodes) missing += (missing.empty() ? "" : ",") + std::to_string(n);
    std::fprintf(stderr, "warning: degraded result, no answer from shard(s) %s\n",
                 missing.c_str());
  }
  std::printf("result query_id=%llu elapsed=%.6f from_cache=%d degraded=%d hits=%zu shards=%u\n",
              static_cast<unsigned long long>(r.query_id), elapsed, r.from_cache ? 1 : 0,
              r.degraded ? 1 : 0, hits, r.shard_count);
  std::fflush(stdout);
}

// Submits over TCP to a serving coordinator and waits for the answer.
QueryResult remote_query(const PeerAddress& addr, const Query& q, long timeout_ms) {
  SocketFabric fabric;
  fabric.add_peer(kReceiverName, addr);
  std::mutex mu;
  std::condition_variable cv;
  std::optional<QueryResult> result;
  std::optional<std::string> error;
  auto client = fabric.attach_client("cli-" + std::to_string(::getpid()),
                                     [&](wire::Envelope env) {
                                       std::lock_guard lock(mu);
                                       if (auto* done = std::get_if<wire::QueryComplete>(&env.payload)) {
                                         result = std::move(done->result);
                                       } else if (auto* e = std::get_if<wire::ErrorMessage>(&env.payload)) {
                                         error = e->text;
                                       }
                                       cv.notify_all();
                                     });
  client->send(kReceiverName, wire::Envelope{1, 0, "", wire::QuerySubmit{q}});
  std::unique_lock lock(mu);
  // The coordinator's own shard timeout bounds the answer; allow slack on top.
  const bool done = cv.wait_for(lock, std::chrono::milliseconds(timeout_ms) + std::chrono::seconds(5),
                                [&] { return result || error; });
  lock.unlock();
  client->close();
  if (error) throw UsageError("coordinator rejected the query: " + *error);
  if (!done) throw TransportError("no answer from " + addr.host + ":" + std::to_string(addr.port));
  return *result;
}

int cmd_query(const QueryArgs& a) {
  const Point center = parse_center(a.center);
  Query q;
  if (a.kind == "knn") {
    if (a.k == 0) throw UsageError("knn needs --k > 0");
    q = KnnQuery{center, a.k};
  } else {
    if (a.radius < 0) throw UsageError("range needs --radius >= 0");
    q = RangeQuery{center, a.radius};
  }
  validate_query(q);
  if (a.data.empty() == a.connect.empty()) throw UsageError("give exactly one of --data or --connect");
  if (a.repeat == 0) throw UsageError("--repeat must be positive");

  if (!a.connect.empty()) {
    const PeerAddress addr = parse_peer_address(a.connect);
    for (std::size_t i = 0; i < a.repeat; ++i) {
      const auto start = Clock::now();
      const QueryResult r = remote_query(addr, q, a.timeout_ms);
      print_result(r, seconds_since(start), a.limit);
    }
    return kExitOk;
  }

  auto trees = load_shards(a.data);
  std::size_t dimension = center.dimension();
  if (!trees.empty()) dimension = trees.front().config().dimension;
  if (center.dimension() != dimension) {
    throw UsageError("--center has " + std::to_string(center.dimension()) +
                     " coordinates, the store has " + std::to_string(dimension));
  }
  LocalClusterOptions options;
  options.coordinator.dimension = dimension;
  options.coordinator.replier.timeout = std::chrono::milliseconds(a.timeout_ms);
  LocalCluster cluster(std::move(trees), options);
  for (std::size_t i = 0; i < a.repeat; ++i) {
    const auto start = Clock::now();
    const QueryResult r = cluster.coordinator().query(a.client, q);
    print_result(r, seconds_since(start), a.limit);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// stats

int cmd_stats(const std::string& dir) {
  std::size_t total_records = 0, total_estimated = 0, total_file = 0;
  std::vector<std::string> corrupt;
  std::printf("%-8s %10s %8s %6s %16s %12s\n", "shard", "records", "nodes", "depth",
              "estimated_bytes", "file_bytes");
  for (const auto& [id, path] : find_snapshots(dir)) {
    const std::size_t file_bytes = fs::file_size(path);
    total_file += file_bytes;
    try {
      const TreeStats s = read_snapshot(path).stats();
      std::printf("%-8zu %10zu %8zu %6zu %16zu %12zu\n", id, s.size, s.node_count, s.depth,
                  s.estimated_bytes, file_bytes);
      total_records += s.size;
      total_estimated += s.estimated_bytes;
    } catch (const Error& e) {
      std::printf("%-8zu %10s %8s %6s %16s %12zu\n", id, "-", "-", "-", "-", file_bytes);
      corrupt.push_back(path.filename().string() + ": " + e.what());
    }
  }
  std::printf("%-8s %10zu %8s %6s %16zu %12zu\n", "total", total_records, "", "", total_estimated,
              total_file);
  for (const auto& c : corrupt) std::fprintf(stderr, "corrupt snapshot %s\n", c.c_str());
  return corrupt.empty() ? kExitOk : kExitRuntime;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::string out = "metrics.csv";
  std::string config;
  std::string sizes;
  std::string dataset;
  std::string mapping;
  std::string distribution;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> shards;
  std::string strategy;
  std::optional<std::size_t> max_entries;
  std::string k_values;
  std::optional<double> radius_min, radius_max;
  std::optional<std::size_t> radius_steps, repetitions, queries, accuracy_size;
  std::optional<std::uint64_t> accuracy_k;
  std::string experiments;
  std::string fabric;
  bool quiet = false;
};

template <typename T>
std::vector<T> parse_numbers(const std::string& text, const char* what) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size() || v < 0) throw std::invalid_argument(item);
      out.push_back(static_cast<T>(v));
    } catch (const std::exception&) {
      throw UsageError(std::string("bad value '") + item + "' in " + what);
    }
  }
  return out;
}

FabricKind parse_fabric(const std::string& text) {
  if (text == "inprocess") return FabricKind::kInProcess;
  if (text == "socket") return FabricKind::kSocket;
  throw UsageError("unknown fabric '" + text + "' (inprocess or socket)");
}

// Config-file keys mirror the long option names with '-' replaced by '_'.
void apply_bench_config(const KvConfig& c, BenchArgs& a) {
  static const std::vector<std::string> known = {
      "sizes", "dataset", "mapping", "distribution", "seed", "shards", "strategy",
      "max_entries", "k", "radius_min", "radius_max", "radius_steps", "repetitions",
      "queries", "accuracy_size", "accuracy_k", "experiments", "fabric", "out"};
  for (const auto& [key, value] : c.values()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw UsageError("unknown bench config key '" + key + "'");
    }
  }
  auto str = [&](const char* key, std::string& field) {
    if (field.empty()) field = c.get_or(key, "");
  };
  auto num = [&](const char* key, auto& field) {
    using T = typename std::decay_t<decltype(field)>::value_type;
    if (!field && c.has(key)) field = static_cast<T>(c.get_double(key, 0));
  };
  str("sizes", a.sizes);
  str("dataset", a.dataset);
  str("mapping", a.mapping);
  str("distribution", a.distribution);
  str("strategy", a.strategy);
  str("k", a.k_values);
  str("experiments", a.experiments);
  str("fabric", a.fabric);
  if (c.has("out")) a.out = *c.get("out");
  num("seed", a.seed);
  num("shards", a.shards);
  num("max_entries", a.max_entries);
  num("radius_min", a.radius_min);
  num("radius_max", a.radius_max);
  num("radius_steps", a.radius_steps);
  num("repetitions", a.repetitions);
  num("queries", a.queries);
  num("accuracy_size", a.accuracy_size);
  num("accuracy_k", a.accuracy_k);
}

int cmd_bench(BenchArgs a) {
  if (!a.config.empty()) apply_bench_config(KvConfig::load(a.config), a);
  BenchSpec spec;
  if (!a.sizes.empty()) spec.sizes = parse_numbers<std::size_t>(a.sizes, "--sizes");
  if (!a.dataset.empty()) {
    spec.dataset = a.dataset;
    if (a.mapping.empty()) throw UsageError("--dataset needs --mapping");
    spec.mapping = ColumnMapping::from_config(KvConfig::load(a.mapping));
  }
  if (!a.distribution.empty()) spec.distribution = parse_distribution(a.distribution);
  if (a.seed) spec.seed = *a.seed;
  if (a.shards) spec.n_shards = *a.shards;
  if (!a.strategy.empty()) spec.strategy = parse_strategy(a.strategy);
  if (a.max_entries) spec.max_entries = *a.max_entries;
  if (!a.k_values.empty()) spec.k_values = parse_numbers<std::uint64_t>(a.k_values, "--k");
  if (a.radius_min) spec.radius_min = *a.radius_min;
  if (a.radius_max) spec.radius_max = *a.radius_max;
  if (a.radius_steps) spec.radius_steps = *a.radius_steps;
  if (a.repetitions) spec.repetitions = *a.repetitions;
  if (a.queries) spec.queries = *a.queries;
  if (a.accuracy_size) spec.accuracy_size = *a.accuracy_size;
  if (a.accuracy_k) spec.accuracy_k = *a.accuracy_k;
  if (!a.experiments.empty()) spec.experiments = split_list(a.experiments);
  if (!a.fabric.empty()) spec.fabric = parse_fabric(a.fabric);
  spec.validate();

  const auto rows = run_bench(spec, a.quiet ? nullptr : &std::cerr);
  write_metrics(fs::path(a.out), rows);
  std::cout << "wrote " << rows.size() << " rows to " << a.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// serve
//
// role = shard
//   listen   = host:port     address the shard listens on
//   id       = 3             shard id
//   snapshot = dir/shard-3.idx
//
// role = coordinator
//   listen         = host:port     where clients submit queries
//   dimension      = 2
//   shards         = 0@host:port, 1@host:port, ...
//   data           = dir           optional; snapshots give shard sizes, bounds and ids
//   timeout_ms     = 5000
//   cache_capacity = 1024
//   routing        = chunk | spatial

void wait_for_signal() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  int sig = 0;
  sigwait(&set, &sig);
}

int cmd_serve(const std::string& config_path) {
  const KvConfig c = KvConfig::load(config_path);
  const std::string role = c.require("role");
  const PeerAddress listen = parse_peer_address(c.require("listen"));

  // Block the stop signals before any thread starts so only sigwait sees them.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  SocketFabric fabric;
  if (role == "shard") {
    const auto id = static_cast<NodeId>(c.get_int("id", -1));
    if (c.get_int("id", -1) < 0) throw UsageError("shard role needs id");
    RPlusTree tree = read_snapshot(c.require("snapshot"));
    const std::size_t size = tree.size();
    fabric.listen_at(shard_node_name(id), listen);
    StoringNode node(id, std::move(tree), fabric);
    const auto bound = fabric.peer(shard_node_name(id));
    std::printf("listening %s on %s:%u with %zu records\n", shard_node_name(id).c_str(),
                bound->host.c_str(), bound->port, size);
    std::fflush(stdout);
    wait_for_signal();
    return kExitOk;
  }
  if (role != "coordinator") throw UsageError("role must be shard or coordinator");

  CoordinatorOptions options;
  options.dimension = static_cast<std::size_t>(c.get_int("dimension", 2));
  options.replier.timeout = std::chrono::milliseconds(c.get_int("timeout_ms", 5000));
  options.replier.cache_capacity =
      static_cast<std::size_t>(c.get_int("cache_capacity", QueryCache::kDefaultCapacity));
  options.replier.routing = parse_strategy(c.get_or("routing", "chunk"));

  std::map<NodeId, PeerAddress> shard_addrs;
  for (const auto& item : c.get_list("shards")) {
    const auto at = item.find('@');
    if (at == std::string::npos) throw UsageError("shards entries look like id@host:port");
    shard_addrs[static_cast<NodeId>(std::stoul(item.substr(0, at)))] =
        parse_peer_address(item.substr(at + 1));
  }
  std::map<NodeId, std::pair<ShardInfo, std::vector<RecordId>>> known;
  if (auto data = c.get("data")) {
    for (const auto& [id, path] : find_snapshots(*data)) {
      const RPlusTree tree = read_snapshot(path);
      ShardInfo info{static_cast<NodeId>(id), tree.size(), tree.bounds()};
      std::vector<RecordId> ids;
      for (const auto& e : tree.entries()) ids.push_back(e.id);
      known[info.node_id] = {info, std::move(ids)};
    }
  }

  fabric.listen_at(kReceiverName, listen);
  for (const auto& [id, addr] : shard_addrs) fabric.add_peer(shard_node_name(id), addr);
  Coordinator coordinator(fabric, options);
  for (const auto& [id, addr] : shard_addrs) {
    if (auto it = known.find(id); it != known.end()) {
      coordinator.add_shard(it->second.first, it->second.second);
    } else {
      coordinator.add_shard(ShardInfo{id, 0, std::nullopt});
    }
  }
  const auto bound = fabric.peer(kReceiverName);
  std::printf("listening coordinator on %s:%u with %zu shards\n", bound->host.c_str(), bound->port,
              shard_addrs.size());
  std::fflush(stdout);
  wait_for_signal();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"caseidx: sharded R+-tree index for case records"};
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* ci = app.add_subcommand("ingest", "Parse, partition and index records into shard snapshots");
  ci->add_option("--input", ingest.input, "CSV file with a header row");
  ci->add_option("--mapping", ingest.mapping, "Column mapping config file");
  ci->add_option("--id-column", ingest.id_column, "Overrides the mapping's id_column");
  ci->add_option("--coord-columns", ingest.coord_columns, "Overrides the mapping's coord_columns");
  ci->add_option("--synthetic", ingest.synthetic, "Generate this many records instead of --input");
  ci->add_option("--seed", ingest.seed, "Seed for --synthetic");
  ci->add_option("--distribution", ingest.distribution, "uniform or clustered");
  ci->add_option("--dimension", ingest.dimension, "Dimension for --synthetic");
  ci->add_option("--shards", ingest.shards, "Number of shards")->capture_default_str();
  ci->add_option("--strategy", ingest.strategy, "chunk or spatial")->capture_default_str();
  ci->add_option("--max-entries", ingest.max_entries, "Node capacity")->capture_default_str();
  ci->add_flag("--serial", ingest.serial, "Build shards on one thread");
  ci->add_option("--name", ingest.name, "Dataset name recorded in the manifest");
  ci->add_option("--out", ingest.out, "Output directory")->required();

  QueryArgs query;
  auto* cq = app.add_subcommand("query", "Run a KNN or range query");
  cq->add_option("kind", query.kind, "knn or range")
      ->required()
      ->check(CLI::IsMember({"knn", "range"}));
  cq->add_option("--center", query.center, "Comma-separated coordinates")->required();
  cq->add_option("--k", query.k, "Neighbors for knn");
  cq->add_option("--radius", query.radius, "Radius for range");
  cq->add_option("--data", query.data, "Directory of shard snapshots served in-process");
  cq->add_option("--connect", query.connect, "host:port of a serving coordinator");
  cq->add_option("--repeat", query.repeat, "Submit the same query this many times");
  cq->add_option("--client", query.client, "Client id for local queries");
  cq->add_option("--timeout-ms", query.timeout_ms, "Shard reply timeout")->capture_default_str();
  cq->add_option("--limit", query.limit, "Rows printed per result")->capture_default_str();

  BenchArgs bench;
  auto* cb = app.add_subcommand("bench", "Run the benchmark experiments and write metrics");
  cb->add_option("--out", bench.out, "Metrics CSV path")->capture_default_str();
  cb->add_option("--config", bench.config, "Bench config file; flags override it");
  cb->add_option("--sizes", bench.sizes, "Synthetic dataset sizes, comma list");
  cb->add_option("--dataset", bench.dataset, "CSV dataset instead of synthetic data");
  cb->add_option("--mapping", bench.mapping, "Column mapping for --dataset");
  cb->add_option("--distribution", bench.distribution, "uniform or clustered");
  cb->add_option("--seed", bench.seed);
  cb->add_option("--shards", bench.shards);
  cb->add_option("--strategy", bench.strategy, "chunk or spatial");
  cb->add_option("--max-entries", bench.max_entries);
  cb->add_option("--k", bench.k_values, "k values, comma list");
  cb->add_option("--radius-min", bench.radius_min);
  cb->add_option("--radius-max", bench.radius_max);
  cb->add_option("--radius-steps", bench.radius_steps);
  cb->add_option("--repetitions", bench.repetitions);
  cb->add_option("--queries", bench.queries, "Query centers per parameter value");
  cb->add_option("--accuracy-size", bench.accuracy_size);
  cb->add_option("--accuracy-k", bench.accuracy_k);
  cb->add_option("--experiments", bench.experiments, "Comma list of experiment names");
  cb->add_option("--fabric", bench.fabric, "inprocess or socket");
  cb->add_flag("--quiet", bench.quiet, "No progress output");

  std::string stats_dir;
  auto* cs = app.add_subcommand("stats", "Report per-shard and total space");
  cs->add_option("--data", stats_dir, "Directory of shard snapshots")->required();

  std::string serve_config;
  auto* cv = app.add_subcommand("serve", "Run a shard or coordinator until SIGINT/SIGTERM");
  cv->add_option("--config", serve_config, "Node config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*ci) return cmd_ingest(ingest);
    if (*cq) return cmd_query(query);
    if (*cb) return cmd_bench(bench);
    if (*cs) return cmd_stats(stats_dir);
    if (*cv) return cmd_serve(serve_config);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
