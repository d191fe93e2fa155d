#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "caseidx/fabric.hpp"

namespace caseidx {

struct PeerAddress {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

/// Parses "host:port".
PeerAddress parse_peer_address(const std::string& text);

/// TCP fabric. Each listening endpoint accepts connections on its port; one
/// persistent connection per peer pair carries frames both ways, and replies
/// travel back over the connection the request arrived on. Frames written by
/// concurrent senders are serialized per connection.
class SocketFabric final : public Fabric {
 public:
  SocketFabric() = default;
  ~SocketFabric() override = default;

  SocketFabric(const SocketFabric&) = delete;
  SocketFabric& operator=(const SocketFabric&) = delete;

  /// Registers where a named peer listens.
  void add_peer(const std::string& name, PeerAddress address);
  std::optional<PeerAddress> peer(const std::string& name) const;

  /// Makes a later attach(name) listen on bind instead of an ephemeral port.
  void listen_at(const std::string& name, PeerAddress bind);

  /// Attaches and listens on an ephemeral loopback port (or the address set
  /// by listen_at), recorded in the directory so other endpoints of this
  /// fabric can dial it.
  std::shared_ptr<Transport> attach(const std::string& name, Handler handler) override;

  /// Attaches and listens on host:port (port 0 picks a free port).
  std::shared_ptr<Transport> attach_listening(const std::string& name, Handler handler,
                                              PeerAddress bind);

  /// Attaches without listening; reaches peers only by dialing them.
  std::shared_ptr<Transport> attach_client(const std::string& name, Handler handler);

 private:
  class Endpoint;

  mutable std::mutex mu_;
  std::map<std::string, PeerAddress> directory_;
  std::map<std::string, PeerAddress> binds_;
};

}  // namespace caseidx
