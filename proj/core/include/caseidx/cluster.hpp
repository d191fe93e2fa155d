#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "caseidx/fabric.hpp"
#include "caseidx/ingest.hpp"
#include "caseidx/query_cache.hpp"
#include "caseidx/rplus_tree.hpp"
#include "caseidx/wire.hpp"

namespace caseidx {

inline constexpr const char* kReceiverName = "receiver";
inline constexpr const char* kReplierName = "replier";
std::string shard_node_name(NodeId id);

/// A shard: one R+-tree behind a fabric endpoint. Requests are handled on a
/// worker thread so shards evaluate independently of each other.
class StoringNode {
 public:
  enum class State { kBuilding, kReady };

  /// Starts in the building state; answers NotReady until set_ready().
  StoringNode(NodeId id, Fabric& fabric);
  /// Starts ready with the given tree.
  StoringNode(NodeId id, RPlusTree tree, Fabric& fabric);
  ~StoringNode();

  StoringNode(const StoringNode&) = delete;
  StoringNode& operator=(const StoringNode&) = delete;

  void set_ready(RPlusTree tree);
  State state() const;

  /// Fault injection: while set, every incoming message is swallowed.
  void set_unresponsive(bool unresponsive) { unresponsive_ = unresponsive; }

  NodeId id() const noexcept { return id_; }
  const std::string& name() const noexcept { return name_; }
  std::size_t size() const;
  RPlusTree tree_copy() const;
  std::uint64_t queries_served() const noexcept { return served_; }

 private:
  void enqueue(wire::Envelope env);
  void work(std::stop_token stop);
  void handle(const wire::Envelope& env);
  void reply(const std::string& to, std::uint64_t correlation, wire::Message msg);

  NodeId id_;
  std::string name_;
  mutable std::shared_mutex tree_mu_;
  RPlusTree tree_;
  State state_ = State::kBuilding;
  std::atomic<bool> unresponsive_{false};
  std::atomic<std::uint64_t> served_{0};
  std::atomic<std::uint64_t> next_message_{1};

  std::mutex queue_mu_;
  std::condition_variable_any queue_cv_;
  std::deque<wire::Envelope> queue_;
  std::jthread worker_;
  std::shared_ptr<Transport> transport_;
};

/// What the replying node knows about a shard.
struct ShardInfo {
  NodeId node_id = 0;
  std::size_t record_count = 0;
  std::optional<Rect> mbr;
};

struct ReplierOptions {
  std::chrono::milliseconds timeout{5000};
  std::size_t cache_capacity = QueryCache::kDefaultCapacity;
  PartitionStrategy routing = PartitionStrategy::kChunk;
  /// On every cache hit also evaluate the query fresh and count mismatches.
  bool verify_cache_hits = false;
};

struct ReplierStats {
  std::uint64_t completed = 0;
  std::uint64_t degraded = 0;
  std::uint64_t fan_outs = 0;
  std::uint64_t verified_hits = 0;
  std::uint64_t cache_mismatches = 0;
  std::uint64_t stray_results = 0;
};

/// Holds the pending-query table: consults the cache, fans queries out to
/// every shard, merges the partials and answers the receiving node. Also
/// routes inserts and invalidates the cache when they are acknowledged.
class ReplyingNode {
 public:
  ReplyingNode(Fabric& fabric, ReplierOptions options = {});
  ~ReplyingNode();

  ReplyingNode(const ReplyingNode&) = delete;
  ReplyingNode& operator=(const ReplyingNode&) = delete;

  /// Registers a shard and the record ids it already stores.
  void add_shard(ShardInfo info, std::span<const RecordId> ids = {});
  std::vector<ShardInfo> shards() const;

  QueryCache& cache() noexcept { return cache_; }
  CacheStats cache_stats() const { return cache_.stats(); }
  ReplierStats stats() const;

 private:
  struct Pending {
    QueryId query_id = 0;
    Query query;
    std::string reply_to;
    std::set<NodeId> expected;
    std::map<NodeId, wire::PartialResult> received;
    std::set<NodeId> failed;
    std::chrono::steady_clock::time_point deadline;
    std::uint64_t generation = 0;
    std::optional<QueryResult> verify_against;
  };
  struct PendingInsert {
    std::string reply_to;
    std::uint64_t reply_correlation = 0;
    CaseRecord record;
    NodeId target = 0;
  };

  void on_message(wire::Envelope env);
  void on_query(const wire::Envelope& env, const wire::ShardQuery& q);
  void on_shard_result(const wire::ShardResult& r);
  void on_shard_error(const wire::Envelope& env, const wire::ErrorMessage& e);
  void on_insert(const wire::Envelope& env, const wire::InsertRecord& ins);
  void on_insert_ack(const wire::Envelope& env, const wire::InsertAck& ack);
  NodeId route(const Point& p) const;
  bool complete(const Pending& p) const {
    return p.received.size() + p.failed.size() >= p.expected.size();
  }
  void finish(Pending&& p, bool timed_out);
  void mark_failed(QueryId id, NodeId node);
  void send(const std::string& to, std::uint64_t correlation, wire::Message msg);
  void expire(std::stop_token stop);

  ReplierOptions options_;
  QueryCache cache_;
  mutable std::mutex mu_;
  std::condition_variable_any timer_cv_;
  std::map<NodeId, ShardInfo> shards_;
  std::unordered_set<RecordId> registry_;
  std::map<QueryId, Pending> pending_;
  std::uint64_t verify_seq_ = 0;
  std::map<std::uint64_t, PendingInsert> inserts_;
  std::uint64_t next_insert_ = 1;
  std::uint64_t generation_ = 0;
  ReplierStats stats_;
  std::atomic<std::uint64_t> next_message_{1};
  std::jthread timer_;
  std::shared_ptr<Transport> transport_;
};

/// Handle for a submitted query: its id is known before evaluation starts.
struct QueryTicket {
  QueryId query_id = 0;
  std::shared_future<QueryResult> result;
};

/// Admits queries from local callers and remote clients, assigns query ids
/// and hands queries to the replying node.
class ReceivingNode {
 public:
  ReceivingNode(Fabric& fabric, std::size_t dimension);
  ~ReceivingNode();

  ReceivingNode(const ReceivingNode&) = delete;
  ReceivingNode& operator=(const ReceivingNode&) = delete;

  /// Throws UsageError (before any id is assigned) for a malformed query or a
  /// center of the wrong dimension.
  QueryTicket submit(ClientId client, const Query& query);

  /// Resolves to the storing node once the insert is acknowledged; fails
  /// with DuplicateIdError or TransportError.
  std::future<NodeId> insert(const CaseRecord& record);

 private:
  struct RemoteInsert {
    std::string client;
    std::uint64_t correlation = 0;
  };

  void on_message(wire::Envelope env);
  QueryId assign_id(ClientId client);
  void send(const std::string& to, std::uint64_t correlation, wire::Message msg);

  std::size_t dimension_;
  std::mutex mu_;
  std::map<ClientId, std::uint64_t> sequences_;
  std::map<std::string, ClientId> remote_clients_;
  ClientId next_remote_client_ = 1u << 20;
  std::map<QueryId, std::promise<QueryResult>> local_;
  std::map<QueryId, std::string> remote_;
  std::map<std::uint64_t, std::promise<NodeId>> local_inserts_;
  std::map<std::uint64_t, RemoteInsert> remote_inserts_;
  std::uint64_t next_insert_ = 1;
  std::atomic<std::uint64_t> next_message_{1};
  std::shared_ptr<Transport> transport_;
};

struct CoordinatorOptions {
  std::size_t dimension = 2;
  ReplierOptions replier;
};

/// Receiving and replying roles co-located on one fabric.
class Coordinator {
 public:
  Coordinator(Fabric& fabric, CoordinatorOptions options = {});

  void add_shard(ShardInfo info, std::span<const RecordId> ids = {}) {
    replier_.add_shard(std::move(info), ids);
  }

  QueryTicket submit_query(ClientId client, const Query& query) {
    return receiver_.submit(client, query);
  }
  /// Blocking submit.
  QueryResult query(ClientId client, const Query& query);
  /// Blocking insert; returns the storing node that took the record.
  NodeId route_insert(const CaseRecord& record);

  CacheStats cache_stats() const { return replier_.cache_stats(); }
  ReplierStats replier_stats() const { return replier_.stats(); }
  ReplyingNode& replier() noexcept { return replier_; }

 private:
  ReplyingNode replier_;
  ReceivingNode receiver_;
};

enum class FabricKind { kInProcess, kSocket };

struct LocalClusterOptions {
  FabricKind fabric = FabricKind::kInProcess;
  CoordinatorOptions coordinator;
  InProcessFabric::Options in_process;
};

/// A whole cluster inside one process: one storing node per tree plus a
/// coordinator. Shard ids follow the order of the trees.
class LocalCluster {
 public:
  explicit LocalCluster(std::vector<RPlusTree> trees, LocalClusterOptions options = {});
  ~LocalCluster();

  Coordinator& coordinator() noexcept { return *coordinator_; }
  StoringNode& shard(std::size_t i) { return *shards_.at(i); }
  std::size_t shard_count() const noexcept { return shards_.size(); }
  Fabric& fabric() noexcept { return *fabric_; }
  /// Null for the socket fabric.
  InProcessFabric* in_process() noexcept;

 private:
  std::unique_ptr<Fabric> fabric_;
  std::vector<std::unique_ptr<StoringNode>> shards_;
  std::unique_ptr<Coordinator> coordinator_;
};

}  // namespace caseidx
