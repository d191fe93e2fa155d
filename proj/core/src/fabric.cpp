#include "caseidx/fabric.hpp"

#include <algorithm>

namespace caseidx {

class InProcessFabric::Endpoint final : public Transport {
 public:
  Endpoint(InProcessFabric& fabric, std::string name) : fabric_(fabric), name_(std::move(name)) {}
  ~Endpoint() override { close(); }

  void send(const std::string& to, wire::Envelope env) override {
    if (closed_) throw TransportError(name_ + " is closed");
    fabric_.send_from(name_, to, std::move(env));
  }

  void close() override {
    if (!closed_.exchange(true)) fabric_.detach(name_);
  }

  const std::string& name() const noexcept override { return name_; }

 private:
  InProcessFabric& fabric_;
  std::string name_;
  std::atomic<bool> closed_{false};
};

InProcessFabric::InProcessFabric() : InProcessFabric(Options{}) {}

InProcessFabric::InProcessFabric(Options options)
    : options_(options), rng_(options.seed), dispatcher_([this](std::stop_token st) { run(st); }) {}

InProcessFabric::~InProcessFabric() {
  dispatcher_.request_stop();
  cv_.notify_all();
}

std::shared_ptr<Transport> InProcessFabric::attach(const std::string& name, Handler handler) {
  std::lock_guard lock(mu_);
  if (handlers_.contains(name)) throw TransportError("node '" + name + "' already attached");
  handlers_[name] = std::make_shared<Handler>(std::move(handler));
  return std::make_shared<Endpoint>(*this, name);
}

void InProcessFabric::detach(const std::string& name) {
  std::unique_lock lock(mu_);
  handlers_.erase(name);
  std::erase_if(queue_, [&](const Pending& p) { return p.to == name; });
  // The dispatcher may be inside this node's handler; wait it out.
  if (std::this_thread::get_id() != dispatcher_.get_id()) {
    cv_.wait(lock, [&] { return delivering_to_ != name; });
  }
}

bool InProcessFabric::matches(const std::map<std::pair<std::string, std::string>, bool>& rules,
                              const std::string& from, const std::string& to) const {
  for (const auto& key : {std::pair{from, to}, std::pair{std::string("*"), to},
                          std::pair{from, std::string("*")}}) {
    if (auto it = rules.find(key); it != rules.end() && it->second) return true;
  }
  return false;
}

void InProcessFabric::send_from(const std::string& from, const std::string& to,
                                wire::Envelope env) {
  env.sender = from;
  Pending p;
  if (options_.serialize) p.frame = wire::encode(env);
  std::lock_guard lock(mu_);
  if (!handlers_.contains(to)) throw TransportError("unknown node '" + to + "'");
  if (matches(drop_rules_, from, to)) {
    ++dropped_;
    return;
  }
  auto due = std::chrono::steady_clock::now();
  for (const auto& key : {std::pair{from, to}, std::pair{std::string("*"), to},
                          std::pair{from, std::string("*")}}) {
    if (auto it = delay_rules_.find(key); it != delay_rules_.end()) {
      due += it->second;
      break;
    }
  }
  p.from = from;
  p.to = to;
  p.due = due;
  if (!options_.serialize) p.env = std::move(env);
  queue_.push_back(std::move(p));
  ++pushes_;
  cv_.notify_all();
}

void InProcessFabric::set_drop(const std::string& from, const std::string& to, bool drop) {
  std::lock_guard lock(mu_);
  drop_rules_[{from, to}] = drop;
}

void InProcessFabric::set_delay(const std::string& from, const std::string& to,
                                std::chrono::milliseconds delay) {
  std::lock_guard lock(mu_);
  delay_rules_[{from, to}] = delay;
}

void InProcessFabric::set_reorder(bool reorder) {
  std::lock_guard lock(mu_);
  options_.reorder = reorder;
}

void InProcessFabric::clear_rules() {
  std::lock_guard lock(mu_);
  drop_rules_.clear();
  delay_rules_.clear();
}

void InProcessFabric::drain() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return queue_.empty() && delivering_to_.empty(); });
}

std::uint64_t InProcessFabric::delivered() const {
  std::lock_guard lock(mu_);
  return delivered_;
}

std::uint64_t InProcessFabric::dropped() const {
  std::lock_guard lock(mu_);
  return dropped_;
}

void InProcessFabric::run(std::stop_token stop) {
  std::unique_lock lock(mu_);
  while (!stop.stop_requested()) {
    const auto now = std::chrono::steady_clock::now();
    std::vector<std::size_t> ready;
    auto next_due = std::chrono::steady_clock::time_point::max();
    for (std::size_t i = 0; i < queue_.size(); ++i) {
      if (queue_[i].due <= now) {
        ready.push_back(i);
        if (!options_.reorder) break;
      } else {
        next_due = std::min(next_due, queue_[i].due);
      }
    }
    if (ready.empty()) {
      const std::uint64_t seen = pushes_;
      const auto woken = [&] { return pushes_ != seen; };
      if (next_due == std::chrono::steady_clock::time_point::max()) {
        cv_.wait(lock, stop, woken);
      } else {
        cv_.wait_until(lock, stop, next_due, woken);
      }
      continue;
    }
    std::size_t pick = ready.front();
    if (options_.reorder) {
      pick = ready[std::uniform_int_distribution<std::size_t>(0, ready.size() - 1)(rng_)];
    }
    Pending p = std::move(queue_[pick]);
    queue_.erase(queue_.begin() + static_cast<std::ptrdiff_t>(pick));
    auto it = handlers_.find(p.to);
    if (it == handlers_.end()) {
      ++dropped_;
      continue;
    }
    std::shared_ptr<Handler> handler = it->second;
    delivering_to_ = p.to;
    lock.unlock();
    try {
      wire::Envelope env = options_.serialize ? wire::decode(p.frame) : std::move(p.env);
      (*handler)(std::move(env));
    } catch (...) {
      // A throwing handler must not take the fabric down with it.
    }
    lock.lock();
    delivering_to_.clear();
    ++delivered_;
    cv_.notify_all();
  }
}

}  // namespace caseidx
