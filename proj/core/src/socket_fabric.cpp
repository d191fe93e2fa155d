#include "caseidx/socket_fabric.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <list>
#include <thread>

namespace caseidx {

PeerAddress parse_peer_address(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon + 1 == text.size()) {
    throw UsageError("expected host:port, got '" + text + "'");
  }
  PeerAddress out;
  out.host = colon == 0 ? std::string("127.0.0.1") : text.substr(0, colon);
  unsigned port = 0;
  const char* first = text.data() + colon + 1;
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, port);
  if (ec != std::errc{} || ptr != last || port > 65535) {
    throw UsageError("bad port in '" + text + "'");
  }
  out.port = static_cast<std::uint16_t>(port);
  return out;
}

namespace {

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

bool write_all(int fd, const std::uint8_t* data, std::size_t len) {
  while (len > 0) {
    const ssize_t n = ::send(fd, data, len, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data += n;
    len -= static_cast<std::size_t>(n);
  }
  return true;
}

int dial(const PeerAddress& addr) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(addr.port);
  if (int rc = ::getaddrinfo(addr.host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw TransportError("resolve " + addr.host + ": " + ::gai_strerror(rc));
  }
  int fd = -1;
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw TransportError("connect " + addr.host + ":" + port + " failed");
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return fd;
}

}  // namespace

class SocketFabric::Endpoint final : public Transport,
                                     public std::enable_shared_from_this<Endpoint> {
 public:
  Endpoint(SocketFabric& fabric, std::string name, Handler handler)
      : fabric_(fabric), name_(std::move(name)), handler_(std::move(handler)) {}

  ~Endpoint() override { close(); }

  std::uint16_t listen_on(const PeerAddress& bind) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    const std::string port = std::to_string(bind.port);
    const char* host = bind.host.empty() ? nullptr : bind.host.c_str();
    if (int rc = ::getaddrinfo(host, port.c_str(), &hints, &res); rc != 0) {
      throw TransportError("resolve " + bind.host + ": " + ::gai_strerror(rc));
    }
    int fd = -1;
    for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
      fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
      if (fd < 0) continue;
      int one = 1;
      ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
      if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 64) == 0) break;
      ::close(fd);
      fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) throw TransportError(errno_text(("listen on port " + port).c_str()));

    sockaddr_storage ss{};
    socklen_t len = sizeof ss;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&ss), &len);
    std::uint16_t bound = 0;
    if (ss.ss_family == AF_INET) {
      bound = ntohs(reinterpret_cast<sockaddr_in*>(&ss)->sin_port);
    } else if (ss.ss_family == AF_INET6) {
      bound = ntohs(reinterpret_cast<sockaddr_in6*>(&ss)->sin6_port);
    }
    listen_fd_ = fd;
    acceptor_ = std::thread([this] { accept_loop(); });
    return bound;
  }

  void send(const std::string& to, wire::Envelope env) override {
    if (closed_) throw TransportError(name_ + " is closed");
    env.sender = name_;
    const std::vector<std::uint8_t> frame = wire::encode(env);
    std::shared_ptr<Conn> conn = connection_to(to);
    std::lock_guard lock(conn->write_mu);
    if (!write_all(conn->fd, frame.data(), frame.size())) {
      forget(conn);
      throw TransportError("send to '" + to + "' failed");
    }
  }

  void close() override {
    if (closed_.exchange(true)) return;
    std::list<std::shared_ptr<Conn>> conns;
    std::thread acceptor;
    {
      std::lock_guard lock(mu_);
      if (listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);
      conns = all_;
      acceptor = std::move(acceptor_);
    }
    if (acceptor.joinable()) join_or_detach(acceptor);
    for (auto& c : conns) ::shutdown(c->fd, SHUT_RDWR);
    for (auto& c : conns) {
      if (c->reader.joinable()) join_or_detach(c->reader);
    }
    std::lock_guard lock(mu_);
    for (auto& c : all_) ::close(c->fd);
    all_.clear();
    by_peer_.clear();
    if (listen_fd_ >= 0) ::close(listen_fd_);
    listen_fd_ = -1;
  }

  const std::string& name() const noexcept override { return name_; }

 private:
  struct Conn {
    int fd = -1;
    std::mutex write_mu;
    std::thread reader;
    std::string peer;
  };

  static void join_or_detach(std::thread& t) {
    if (t.get_id() == std::this_thread::get_id()) {
      t.detach();
    } else {
      t.join();
    }
  }

  std::shared_ptr<Conn> connection_to(const std::string& to) {
    {
      std::lock_guard lock(mu_);
      if (auto it = by_peer_.find(to); it != by_peer_.end()) return it->second;
    }
    auto addr = fabric_.peer(to);
    if (!addr) throw TransportError("unknown node '" + to + "'");
    const int fd = dial(*addr);
    std::lock_guard lock(mu_);
    if (closed_) {
      ::close(fd);
      throw TransportError(name_ + " is closed");
    }
    // Another sender may have raced us to the same peer.
    if (auto it = by_peer_.find(to); it != by_peer_.end()) {
      ::close(fd);
      return it->second;
    }
    auto conn = std::make_shared<Conn>();
    conn->fd = fd;
    conn->peer = to;
    by_peer_[to] = conn;
    all_.push_back(conn);
    conn->reader = std::thread([this, conn] { read_loop(conn); });
    return conn;
  }

  void forget(const std::shared_ptr<Conn>& conn) {
    std::lock_guard lock(mu_);
    if (!conn->peer.empty()) {
      auto it = by_peer_.find(conn->peer);
      if (it != by_peer_.end() && it->second == conn) by_peer_.erase(it);
    }
    ::shutdown(conn->fd, SHUT_RDWR);
  }

  void accept_loop() {
    while (!closed_) {
      const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
      if (fd < 0) {
        if (errno == EINTR || errno == ECONNABORTED) continue;
        return;
      }
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      std::lock_guard lock(mu_);
      if (closed_) {
        ::close(fd);
        return;
      }
      auto conn = std::make_shared<Conn>();
      conn->fd = fd;
      all_.push_back(conn);
      conn->reader = std::thread([this, conn] { read_loop(conn); });
    }
  }

  void read_loop(const std::shared_ptr<Conn>& conn) {
    std::vector<std::uint8_t> buf;
    std::uint8_t chunk[64 * 1024];
    while (!closed_) {
      const ssize_t n = ::recv(conn->fd, chunk, sizeof chunk, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) break;
      buf.insert(buf.end(), chunk, chunk + n);
      try {
        std::size_t offset = 0;
        while (auto size = wire::complete_frame_size(
                   std::span<const std::uint8_t>(buf).subspan(offset))) {
          wire::Envelope env =
              wire::decode(std::span<const std::uint8_t>(buf).subspan(offset, *size));
          offset += *size;
          register_peer(conn, env.sender);
          try {
            handler_(std::move(env));
          } catch (...) {
          }
        }
        buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(offset));
      } catch (const wire::DecodeError&) {
        // The stream cannot be resynchronised after a bad frame.
        break;
      }
    }
    forget(conn);
  }

  void register_peer(const std::shared_ptr<Conn>& conn, const std::string& sender) {
    if (!conn->peer.empty() || sender.empty()) return;
    std::lock_guard lock(mu_);
    conn->peer = sender;
    by_peer_.try_emplace(sender, conn);
  }

  SocketFabric& fabric_;
  std::string name_;
  Handler handler_;
  std::atomic<bool> closed_{false};
  std::mutex mu_;
  int listen_fd_ = -1;
  std::thread acceptor_;
  std::list<std::shared_ptr<Conn>> all_;
  std::map<std::string, std::shared_ptr<Conn>> by_peer_;
};

void SocketFabric::add_peer(const std::string& name, PeerAddress address) {
  std::lock_guard lock(mu_);
  directory_[name] = std::move(address);
}

std::optional<PeerAddress> SocketFabric::peer(const std::string& name) const {
  std::lock_guard lock(mu_);
  if (auto it = directory_.find(name); it != directory_.end()) return it->second;
  return std::nullopt;
}

void SocketFabric::listen_at(const std::string& name, PeerAddress bind) {
  std::lock_guard lock(mu_);
  binds_[name] = std::move(bind);
}

std::shared_ptr<Transport> SocketFabric::attach(const std::string& name, Handler handler) {
  PeerAddress bind{"127.0.0.1", 0};
  {
    std::lock_guard lock(mu_);
    if (auto it = binds_.find(name); it != binds_.end()) bind = it->second;
  }
  return attach_listening(name, std::move(handler), bind);
}

std::shared_ptr<Transport> SocketFabric::attach_listening(const std::string& name,
                                                          Handler handler, PeerAddress bind) {
  auto ep = std::make_shared<Endpoint>(*this, name, std::move(handler));
  const std::uint16_t port = ep->listen_on(bind);
  std::string host = bind.host.empty() || bind.host == "0.0.0.0" ? "127.0.0.1" : bind.host;
  add_peer(name, PeerAddress{host, port});
  return ep;
}

std::shared_ptr<Transport> SocketFabric::attach_client(const std::string& name, Handler handler) {
  return std::make_shared<Endpoint>(*this, name, std::move(handler));
}

}  // namespace caseidx
