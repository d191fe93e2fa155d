#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <utility>

#include "caseidx/error.hpp"
#include "caseidx/wire.hpp"

namespace caseidx {

class TransportError : public Error {
 public:
  using Error::Error;
};

/// Delivery callback. Runs on a fabric thread and must not block.
using Handler = std::function<void(wire::Envelope)>;

/// A named endpoint attached to a fabric.
class Transport {
 public:
  virtual ~Transport() = default;

  /// Stamps env.sender with this endpoint's name and queues it for `to`.
  /// Throws TransportError when `to` is unknown or unreachable.
  virtual void send(const std::string& to, wire::Envelope env) = 0;

  /// Detaches from the fabric. After close() returns the handler is never
  /// invoked again.
  virtual void close() = 0;

  virtual const std::string& name() const noexcept = 0;
};

class Fabric {
 public:
  virtual ~Fabric() = default;
  virtual std::shared_ptr<Transport> attach(const std::string& name, Handler handler) = 0;
};

/// Deterministic in-process message fabric for tests and single-process
/// clusters. A single dispatcher thread delivers messages in send order by
/// default. Per-link drop and delay rules and seeded random reordering drive
/// the fault-handling paths.
class InProcessFabric final : public Fabric {
 public:
  struct Options {
    /// Round-trip every message through the wire codec.
    bool serialize = true;
    bool reorder = false;
    std::uint64_t seed = 1;
  };

  InProcessFabric();
  explicit InProcessFabric(Options options);
  ~InProcessFabric() override;

  InProcessFabric(const InProcessFabric&) = delete;
  InProcessFabric& operator=(const InProcessFabric&) = delete;

  std::shared_ptr<Transport> attach(const std::string& name, Handler handler) override;

  /// Silently discards messages from `from` to `to` while set. "*" matches any node.
  void set_drop(const std::string& from, const std::string& to, bool drop);
  void set_delay(const std::string& from, const std::string& to, std::chrono::milliseconds delay);
  void set_reorder(bool reorder);
  void clear_rules();

  /// Blocks until no message is queued or being delivered.
  void drain();

  std::uint64_t delivered() const;
  std::uint64_t dropped() const;

 private:
  class Endpoint;
  struct Pending {
    std::string from;
    std::string to;
    std::chrono::steady_clock::time_point due;
    wire::Envelope env;
    std::vector<std::uint8_t> frame;
  };

  void send_from(const std::string& from, const std::string& to, wire::Envelope env);
  void detach(const std::string& name);
  void run(std::stop_token stop);
  bool matches(const std::map<std::pair<std::string, std::string>, bool>& rules,
               const std::string& from, const std::string& to) const;

  Options options_;
  mutable std::mutex mu_;
  std::condition_variable_any cv_;
  std::map<std::string, std::shared_ptr<Handler>> handlers_;
  std::deque<Pending> queue_;
  std::map<std::pair<std::string, std::string>, bool> drop_rules_;
  std::map<std::pair<std::string, std::string>, std::chrono::milliseconds> delay_rules_;
  std::mt19937_64 rng_;
  std::string delivering_to_;
  std::uint64_t delivered_ = 0;
  std::uint64_t dropped_ = 0;
  std::uint64_t pushes_ = 0;
  std::jthread dispatcher_;
};

}  // namespace caseidx
