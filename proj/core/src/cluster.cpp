#include "caseidx/cluster.hpp"

#include <algorithm>
#include <limits>

#include "caseidx/merge.hpp"
#include "caseidx/socket_fabric.hpp"

namespace caseidx {

std::string shard_node_name(NodeId id) { return "shard-" + std::to_string(id); }

namespace {

// Verification fan-outs and insert correlations use ids no client query can
// be assigned; client ids stay below kMaxClientId.
constexpr QueryId kVerifyBit = QueryId{1} << 63;
constexpr std::uint64_t kInsertBit = std::uint64_t{1} << 62;
constexpr ClientId kMaxClientId = ClientId{1} << 22;

wire::ErrorMessage error_message(wire::ErrorCode code, std::string text) {
  return wire::ErrorMessage{static_cast<std::uint16_t>(code), std::move(text)};
}

}  // namespace

// ---------------------------------------------------------------------------
// StoringNode

StoringNode::StoringNode(NodeId id, Fabric& fabric)
    : id_(id), name_(shard_node_name(id)), worker_([this](std::stop_token st) { work(st); }) {
  transport_ = fabric.attach(name_, [this](wire::Envelope env) { enqueue(std::move(env)); });
}

StoringNode::StoringNode(NodeId id, RPlusTree tree, Fabric& fabric) : StoringNode(id, fabric) {
  set_ready(std::move(tree));
}

StoringNode::~StoringNode() {
  transport_->close();
  worker_.request_stop();
  queue_cv_.notify_all();
  if (worker_.joinable()) worker_.join();
}

void StoringNode::set_ready(RPlusTree tree) {
  std::unique_lock lock(tree_mu_);
  tree_ = std::move(tree);
  state_ = State::kReady;
}

StoringNode::State StoringNode::state() const {
  std::shared_lock lock(tree_mu_);
  return state_;
}

std::size_t StoringNode::size() const {
  std::shared_lock lock(tree_mu_);
  return tree_.size();
}

RPlusTree StoringNode::tree_copy() const {
  std::shared_lock lock(tree_mu_);
  return tree_;
}

void StoringNode::enqueue(wire::Envelope env) {
  if (unresponsive_) return;
  {
    std::lock_guard lock(queue_mu_);
    queue_.push_back(std::move(env));
  }
  queue_cv_.notify_one();
}

void StoringNode::work(std::stop_token stop) {
  std::unique_lock lock(queue_mu_);
  while (true) {
    queue_cv_.wait(lock, stop, [&] { return !queue_.empty(); });
    if (stop.stop_requested()) return;
    wire::Envelope env = std::move(queue_.front());
    queue_.pop_front();
    lock.unlock();
    try {
      handle(env);
    } catch (const std::exception&) {
      // Reply failures leave the requester to time out.
    }
    lock.lock();
  }
}

void StoringNode::reply(const std::string& to, std::uint64_t correlation, wire::Message msg) {
  wire::Envelope env;
  env.message_id = next_message_++;
  env.correlation_id = correlation;
  env.payload = std::move(msg);
  transport_->send(to, std::move(env));
}

void StoringNode::handle(const wire::Envelope& env) {
  if (const auto* q = std::get_if<wire::ShardQuery>(&env.payload)) {
    wire::ShardResult out;
    out.query_id = q->query_id;
    out.node_id = id_;
    {
      std::shared_lock lock(tree_mu_);
      if (state_ != State::kReady) {
        lock.unlock();
        reply(env.sender, q->query_id,
              error_message(wire::ErrorCode::kNotReady, name_ + " is building"));
        return;
      }
      const Point& center = query_center(q->query);
      if (!tree_.empty() && center.dimension() != tree_.config().dimension) {
        lock.unlock();
        reply(env.sender, q->query_id,
              error_message(wire::ErrorCode::kMalformedQuery, "dimension mismatch"));
        return;
      }
      if (const auto* knn = std::get_if<KnnQuery>(&q->query)) {
        out.partial.kind = QueryKind::kKnn;
        if (!tree_.empty()) out.partial.neighbors = tree_.knn_query(knn->center, knn->k);
      } else {
        const auto& range = std::get<RangeQuery>(q->query);
        out.partial.kind = QueryKind::kRange;
        if (!tree_.empty()) out.partial.ids = tree_.range_query(range.center, range.radius);
      }
    }
    ++served_;
    reply(env.sender, q->query_id, std::move(out));
  } else if (const auto* ins = std::get_if<wire::InsertRecord>(&env.payload)) {
    std::unique_lock lock(tree_mu_);
    if (state_ != State::kReady) {
      lock.unlock();
      reply(env.sender, env.correlation_id,
            error_message(wire::ErrorCode::kNotReady, name_ + " is building"));
      return;
    }
    if (tree_.contains(ins->record.record_id)) {
      lock.unlock();
      reply(env.sender, env.correlation_id,
            error_message(wire::ErrorCode::kDuplicateId,
                          "record_id " + std::to_string(ins->record.record_id) + " exists"));
      return;
    }
    try {
      tree_.insert(ins->record);
    } catch (const Error& e) {
      lock.unlock();
      reply(env.sender, env.correlation_id,
            error_message(wire::ErrorCode::kMalformedQuery, e.what()));
      return;
    }
    lock.unlock();
    reply(env.sender, env.correlation_id, wire::InsertAck{id_});
  }
}

// ---------------------------------------------------------------------------
// ReplyingNode

ReplyingNode::ReplyingNode(Fabric& fabric, ReplierOptions options)
    : options_(options),
      cache_(options.cache_capacity),
      timer_([this](std::stop_token st) { expire(st); }) {
  transport_ = fabric.attach(kReplierName, [this](wire::Envelope env) { on_message(std::move(env)); });
}

ReplyingNode::~ReplyingNode() {
  transport_->close();
  timer_.request_stop();
  timer_cv_.notify_all();
  if (timer_.joinable()) timer_.join();
}

void ReplyingNode::add_shard(ShardInfo info, std::span<const RecordId> ids) {
  std::lock_guard lock(mu_);
  registry_.insert(ids.begin(), ids.end());
  shards_[info.node_id] = std::move(info);
}

std::vector<ShardInfo> ReplyingNode::shards() const {
  std::lock_guard lock(mu_);
  std::vector<ShardInfo> out;
  for (const auto& [id, info] : shards_) out.push_back(info);
  return out;
}

ReplierStats ReplyingNode::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

void ReplyingNode::send(const std::string& to, std::uint64_t correlation, wire::Message msg) {
  wire::Envelope env;
  env.message_id = next_message_++;
  env.correlation_id = correlation;
  env.payload = std::move(msg);
  transport_->send(to, std::move(env));
}

void ReplyingNode::on_message(wire::Envelope env) {
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, wire::ShardQuery>) {
          on_query(env, m);
        } else if constexpr (std::is_same_v<T, wire::ShardResult>) {
          on_shard_result(m);
        } else if constexpr (std::is_same_v<T, wire::ErrorMessage>) {
          on_shard_error(env, m);
        } else if constexpr (std::is_same_v<T, wire::InsertRecord>) {
          on_insert(env, m);
        } else if constexpr (std::is_same_v<T, wire::InsertAck>) {
          on_insert_ack(env, m);
        }
      },
      env.payload);
}


void ReplyingNode::on_query(const wire::Envelope& env, const wire::ShardQuery& q) {
  std::optional<QueryResult> hit = cache_.lookup(q.query);
  if (hit) {
    hit->query_id = q.query_id;
    send(env.sender, q.query_id, wire::QueryComplete{*hit});
    if (!options_.verify_cache_hits) return;
  }

  Pending p;
  p.query = q.query;
  p.reply_to = env.sender;
  p.deadline = std::chrono::steady_clock::now() + options_.timeout;
  p.verify_against = std::move(hit);
  std::vector<NodeId> targets;
  {
    std::lock_guard lock(mu_);
    p.query_id = p.verify_against ? (kVerifyBit | ++verify_seq_) : q.query_id;
    for (const auto& [id, info] : shards_) {
      p.expected.insert(id);
      targets.push_back(id);
    }
    p.generation = generation_;
  }
  if (targets.empty()) {
    finish(std::move(p), false);
    return;
  }
  const QueryId id = p.query_id;
  const Query query = p.query;
  {
    std::lock_guard lock(mu_);
    ++stats_.fan_outs;
    pending_.emplace(id, std::move(p));
  }
  timer_cv_.notify_all();
  for (NodeId t : targets) {
    try {
      send(shard_node_name(t), id, wire::ShardQuery{id, query});
    } catch (const TransportError&) {
      mark_failed(id, t);
    }
  }
}

void ReplyingNode::mark_failed(QueryId id, NodeId node) {
  std::optional<Pending> done;
  {
    std::lock_guard lock(mu_);
    auto it = pending_.find(id);
    if (it == pending_.end() || !it->second.expected.contains(node) ||
        it->second.received.contains(node)) {
      return;
    }
    it->second.failed.insert(node);
    if (complete(it->second)) {
      done = std::move(it->second);
      pending_.erase(it);
    }
  }
  if (done) finish(std::move(*done), false);
}

void ReplyingNode::on_shard_result(const wire::ShardResult& r) {
  std::optional<Pending> done;
  {
    std::lock_guard lock(mu_);
    auto it = pending_.find(r.query_id);
    // Late, duplicate or foreign answers are ignored; the id is the only key.
    if (it == pending_.end() || !it->second.expected.contains(r.node_id) ||
        it->second.received.contains(r.node_id) || it->second.failed.contains(r.node_id) ||
        r.partial.kind != (is_knn(it->second.query) ? QueryKind::kKnn : QueryKind::kRange)) {
      ++stats_.stray_results;
      return;
    }
    it->second.received.emplace(r.node_id, r.partial);
    if (complete(it->second)) {
      done = std::move(it->second);
      pending_.erase(it);
    }
  }
  if (done) finish(std::move(*done), false);
}

void ReplyingNode::on_shard_error(const wire::Envelope& env, const wire::ErrorMessage& e) {
  if (env.correlation_id & kInsertBit) {
    PendingInsert ins;
    {
      std::lock_guard lock(mu_);
      auto it = inserts_.find(env.correlation_id);
      if (it == inserts_.end()) return;
      ins = std::move(it->second);
      inserts_.erase(it);
      registry_.erase(ins.record.record_id);
    }
    try {
      send(ins.reply_to, ins.reply_correlation, e);
    } catch (const TransportError&) {
    }
    return;
  }
  const std::string prefix = "shard-";
  if (env.sender.rfind(prefix, 0) != 0) return;
  NodeId node = 0;
  try {
    node = static_cast<NodeId>(std::stoul(env.sender.substr(prefix.size())));
  } catch (const std::exception&) {
    return;
  }
  mark_failed(env.correlation_id, node);
}

void ReplyingNode::finish(Pending&& p, bool timed_out) {
  QueryResult result;
  result.query_id = p.query_id;
  result.kind = is_knn(p.query) ? QueryKind::kKnn : QueryKind::kRange;
  result.shard_count = static_cast<std::uint32_t>(p.expected.size());
  for (NodeId n : p.expected) {
    if (!p.received.contains(n)) result.missing_nodes.push_back(n);
  }
  result.degraded = !result.missing_nodes.empty();
  (void)timed_out;

  if (const auto* knn = std::get_if<KnnQuery>(&p.query)) {
    std::vector<std::vector<Neighbor>> parts;
    parts.reserve(p.received.size());
    for (auto& [n, part] : p.received) parts.push_back(std::move(part.neighbors));
    result.neighbors = merge_knn(parts, knn->k);
  } else {
    std::vector<std::vector<RecordId>> parts;
    parts.reserve(p.received.size());
    for (auto& [n, part] : p.received) parts.push_back(std::move(part.ids));
    RangeMerge merged = merge_range(parts);
    result.ids = std::move(merged.ids);
    result.duplicates_removed = merged.duplicates_removed;
  }

  {
    std::lock_guard lock(mu_);
    if (p.verify_against) {
      ++stats_.verified_hits;
      if (!result.degraded && !p.verify_against->same_answer(result)) ++stats_.cache_mismatches;
      return;
    }
    ++stats_.completed;
    if (result.degraded) ++stats_.degraded;
    // A write acknowledged while the query was in flight makes its answer
    // unsafe to reuse. Inserting under mu_ orders it against invalidation.
    if (!result.degraded && p.generation == generation_) cache_.insert(p.query, result);
  }
  try {
    send(p.reply_to, p.query_id, wire::QueryComplete{std::move(result)});
  } catch (const TransportError&) {
  }
}

void ReplyingNode::expire(std::stop_token stop) {
  std::unique_lock lock(mu_);
  while (!stop.stop_requested()) {
    auto next = std::chrono::steady_clock::time_point::max();
    const auto now = std::chrono::steady_clock::now();
    std::vector<Pending> due;
    for (auto it = pending_.begin(); it != pending_.end();) {
      if (it->second.deadline <= now) {
        due.push_back(std::move(it->second));
        it = pending_.erase(it);
      } else {
        next = std::min(next, it->second.deadline);
        ++it;
      }
    }
    if (!due.empty()) {
      lock.unlock();
      for (auto& p : due) finish(std::move(p), true);
      lock.lock();
      continue;
    }
    const std::size_t seen = pending_.size();
    const auto changed = [&] { return pending_.size() != seen; };
    if (next == std::chrono::steady_clock::time_point::max()) {
      timer_cv_.wait(lock, stop, changed);
    } else {
      timer_cv_.wait_until(lock, stop, next, changed);
    }
  }
}

NodeId ReplyingNode::route(const Point& p) const {
  const ShardInfo* best = nullptr;
  if (options_.routing == PartitionStrategy::kSpatial) {
    double best_dist = std::numeric_limits<double>::infinity();
    for (const auto& [id, info] : shards_) {
      if (!info.mbr) continue;
      if (info.mbr->contains(p)) return id;
      const double d = mindist(p, *info.mbr);
      if (d < best_dist) {
        best_dist = d;
        best = &info;
      }
    }
    if (best) return best->node_id;
  }
  for (const auto& [id, info] : shards_) {
    if (!best || info.record_count < best->record_count) best = &info;
  }
  return best->node_id;
}

void ReplyingNode::on_insert(const wire::Envelope& env, const wire::InsertRecord& ins) {
  std::uint64_t correlation = 0;
  NodeId target = 0;
  {
    std::lock_guard lock(mu_);
    std::string refusal;
    wire::ErrorCode code = wire::ErrorCode::kDuplicateId;
    if (shards_.empty()) {
      code = wire::ErrorCode::kUnavailable;
      refusal = "no storing nodes";
    } else if (registry_.contains(ins.record.record_id)) {
      refusal = "record_id " + std::to_string(ins.record.record_id) + " exists";
    }
    if (!refusal.empty()) {
      try {
        send(env.sender, env.correlation_id, error_message(code, refusal));
      } catch (const TransportError&) {
      }
      return;
    }
    registry_.insert(ins.record.record_id);
    target = route(ins.record.position);
    correlation = kInsertBit | next_insert_++;
    inserts_[correlation] = PendingInsert{env.sender, env.correlation_id, ins.record, target};
    ++generation_;
  }
  try {
    send(shard_node_name(target), correlation, ins);
  } catch (const TransportError& e) {
    PendingInsert dead;
    {
      std::lock_guard lock(mu_);
      dead = std::move(inserts_[correlation]);
      inserts_.erase(correlation);
      registry_.erase(ins.record.record_id);
    }
    try {
      send(dead.reply_to, dead.reply_correlation,
           error_message(wire::ErrorCode::kUnavailable, e.what()));
    } catch (const TransportError&) {
    }
  }
}

void ReplyingNode::on_insert_ack(const wire::Envelope& env, const wire::InsertAck& ack) {
  PendingInsert ins;
  {
    std::lock_guard lock(mu_);
    auto it = inserts_.find(env.correlation_id);
    if (it == inserts_.end()) return;
    ins = std::move(it->second);
    inserts_.erase(it);
    ShardInfo& info = shards_[ack.node_id];
    ++info.record_count;
    info.mbr = info.mbr ? rect_union(*info.mbr, ins.record.position)
                        : Rect::of_point(ins.record.position);
    ++generation_;
    // Invalidate before acknowledging so no later-admitted query sees a stale hit.
    cache_.invalidate_all();
  }
  try {
    send(ins.reply_to, ins.reply_correlation, ack);
  } catch (const TransportError&) {
  }
}

// ---------------------------------------------------------------------------
// ReceivingNode

ReceivingNode::ReceivingNode(Fabric& fabric, std::size_t dimension) : dimension_(dimension) {
  transport_ = fabric.attach(kReceiverName, [this](wire::Envelope env) { on_message(std::move(env)); });
}

ReceivingNode::~ReceivingNode() {
  transport_->close();
  std::lock_guard lock(mu_);
  for (auto& [id, promise] : local_) {
    promise.set_exception(std::make_exception_ptr(TransportError("receiver shut down")));
  }
  for (auto& [id, promise] : local_inserts_) {
    promise.set_exception(std::make_exception_ptr(TransportError("receiver shut down")));
  }
}

void ReceivingNode::send(const std::string& to, std::uint64_t correlation, wire::Message msg) {
  wire::Envelope env;
  env.message_id = next_message_++;
  env.correlation_id = correlation;
  env.payload = std::move(msg);
  transport_->send(to, std::move(env));
}

QueryId ReceivingNode::assign_id(ClientId client) {
  return make_query_id(client, ++sequences_[client]);
}

QueryTicket ReceivingNode::submit(ClientId client, const Query& query) {
  if (client >= kMaxClientId) throw UsageError("client id out of range");
  validate_query(query);
  if (query_center(query).dimension() != dimension_) {
    throw UsageError("query has dimension " + std::to_string(query_center(query).dimension()) +
                     ", store has " + std::to_string(dimension_));
  }
  QueryTicket ticket;
  {
    std::lock_guard lock(mu_);
    ticket.query_id = assign_id(client);
    ticket.result = local_[ticket.query_id].get_future().share();
  }
  try {
    send(kReplierName, ticket.query_id, wire::ShardQuery{ticket.query_id, query});
  } catch (const TransportError&) {
    std::lock_guard lock(mu_);
    auto it = local_.find(ticket.query_id);
    if (it != local_.end()) {
      it->second.set_exception(std::current_exception());
      local_.erase(it);
    }
  }
  return ticket;
}

std::future<NodeId> ReceivingNode::insert(const CaseRecord& record) {
  if (record.position.dimension() != dimension_) {
    throw UsageError("record has dimension " + std::to_string(record.position.dimension()) +
                     ", store has " + std::to_string(dimension_));
  }
  std::uint64_t correlation = 0;
  std::future<NodeId> out;
  {
    std::lock_guard lock(mu_);
    correlation = kInsertBit | next_insert_++;
    out = local_inserts_[correlation].get_future();
  }
  try {
    send(kReplierName, correlation, wire::InsertRecord{record});
  } catch (const TransportError&) {
    std::lock_guard lock(mu_);
    auto it = local_inserts_.find(correlation);
    if (it != local_inserts_.end()) {
      it->second.set_exception(std::current_exception());
      local_inserts_.erase(it);
    }
  }
  return out;
}

void ReceivingNode::on_message(wire::Envelope env) {
  if (auto* done = std::get_if<wire::QueryComplete>(&env.payload)) {
    const QueryId id = done->result.query_id;
    std::string remote;
    {
      std::lock_guard lock(mu_);
      if (auto it = local_.find(id); it != local_.end()) {
        it->second.set_value(std::move(done->result));
        local_.erase(it);
        return;
      }
      auto it = remote_.find(id);
      if (it == remote_.end()) return;
      remote = std::move(it->second);
      remote_.erase(it);
    }
    try {
      send(remote, id, std::move(*done));
    } catch (const TransportError&) {
    }
  } else if (auto* submit = std::get_if<wire::QuerySubmit>(&env.payload)) {
    QueryId id = 0;
    try {
      validate_query(submit->query);
      if (query_center(submit->query).dimension() != dimension_) {
        throw UsageError("query dimension does not match the store");
      }
    } catch (const Error& e) {
      try {
        send(env.sender, env.message_id,
             error_message(wire::ErrorCode::kMalformedQuery, e.what()));
      } catch (const TransportError&) {
      }
      return;
    }
    {
      std::lock_guard lock(mu_);
      auto [it, fresh] = remote_clients_.try_emplace(env.sender, next_remote_client_);
      if (fresh) ++next_remote_client_;
      id = assign_id(it->second);
      remote_[id] = env.sender;
    }
    try {
      send(env.sender, env.message_id, wire::QueryAck{id});
      send(kReplierName, id, wire::ShardQuery{id, submit->query});
    } catch (const TransportError&) {
      std::lock_guard lock(mu_);
      remote_.erase(id);
    }
  } else if (auto* ins = std::get_if<wire::InsertRecord>(&env.payload)) {
    if (ins->record.position.dimension() != dimension_) {
      try {
        send(env.sender, env.message_id,
             error_message(wire::ErrorCode::kMalformedQuery, "record dimension does not match"));
      } catch (const TransportError&) {
      }
      return;
    }
    std::uint64_t correlation = 0;
    {
      std::lock_guard lock(mu_);
      correlation = kInsertBit | next_insert_++;
      remote_inserts_[correlation] = RemoteInsert{env.sender, env.message_id};
    }
    try {
      send(kReplierName, correlation, *ins);
    } catch (const TransportError&) {
      std::lock_guard lock(mu_);
      remote_inserts_.erase(correlation);
    }
  } else if (std::holds_alternative<wire::InsertAck>(env.payload) ||
             std::holds_alternative<wire::ErrorMessage>(env.payload)) {
    std::optional<RemoteInsert> remote;
    {
      std::lock_guard lock(mu_);
      if (auto it = local_inserts_.find(env.correlation_id); it != local_inserts_.end()) {
        if (auto* ack = std::get_if<wire::InsertAck>(&env.payload)) {
          it->second.set_value(ack->node_id);
        } else {
          const auto& err = std::get<wire::ErrorMessage>(env.payload);
          std::exception_ptr ex;
          if (err.code == static_cast<std::uint16_t>(wire::ErrorCode::kDuplicateId)) {
            ex = std::make_exception_ptr(DuplicateIdError({}, err.text));
          } else {
            ex = std::make_exception_ptr(TransportError(err.text));
          }
          it->second.set_exception(ex);
        }
        local_inserts_.erase(it);
        return;
      }
      if (auto it = remote_inserts_.find(env.correlation_id); it != remote_inserts_.end()) {
        remote = it->second;
        remote_inserts_.erase(it);
      }
    }
    if (remote) {
      try {
        send(remote->client, remote->correlation, env.payload);
      } catch (const TransportError&) {
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Coordinator

Coordinator::Coordinator(Fabric& fabric, CoordinatorOptions options)
    : replier_(fabric, options.replier), receiver_(fabric, options.dimension) {}

QueryResult Coordinator::query(ClientId client, const Query& query) {
  return submit_query(client, query).result.get();
}

NodeId Coordinator::route_insert(const CaseRecord& record) {
  return receiver_.insert(record).get();
}

// ---------------------------------------------------------------------------
// LocalCluster

LocalCluster::LocalCluster(std::vector<RPlusTree> trees, LocalClusterOptions options) {
  if (options.fabric == FabricKind::kSocket) {
    fabric_ = std::make_unique<SocketFabric>();
  } else {
    fabric_ = std::make_unique<InProcessFabric>(options.in_process);
  }
  std::vector<ShardInfo> infos;
  std::vector<std::vector<RecordId>> ids;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    ShardInfo info;
    info.node_id = static_cast<NodeId>(i);
    info.record_count = trees[i].size();
    info.mbr = trees[i].bounds();
    std::vector<RecordId> shard_ids;
    for (const auto& e : trees[i].entries()) shard_ids.push_back(e.id);
    infos.push_back(info);
    ids.push_back(std::move(shard_ids));
    shards_.push_back(std::make_unique<StoringNode>(info.node_id, std::move(trees[i]), *fabric_));
  }
  coordinator_ = std::make_unique<Coordinator>(*fabric_, options.coordinator);
  for (std::size_t i = 0; i < infos.size(); ++i) coordinator_->add_shard(infos[i], ids[i]);
}

LocalCluster::~LocalCluster() {
  coordinator_.reset();
  shards_.clear();
}

InProcessFabric* LocalCluster::in_process() noexcept {
  return dynamic_cast<InProcessFabric*>(fabric_.get());
}

}  // namespace caseidx
