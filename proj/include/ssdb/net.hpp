#pragma once

// Blocking POSIX TCP with poll-based timeouts, plus a small threaded server
// that answers framed requests in arrival order on each connection.

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/eventfd.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <spdlog/spdlog.h>
#include <string>
#include <thread>
#include <utility>

#include "ssdb/error.hpp"
#include "ssdb/protocol.hpp"

namespace ssdb::net {

using proto::Message;

using Clock = std::chrono::steady_clock;
using std::chrono::milliseconds;

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  std::string to_string() const { return host + ":" + std::to_string(port); }
};

inline Endpoint parse_endpoint(const std::string& s) {
  auto colon = s.rfind(':');
  ensure(colon != std::string::npos && colon > 0 && colon + 1 < s.size(), ErrorCode::Usage,
         "address '" + s + "' is not HOST:PORT");
  unsigned long port = 0;
  try {
    std::size_t used = 0;
    port = std::stoul(s.substr(colon + 1), &used);
    ensure(used == s.size() - colon - 1, ErrorCode::Usage, "bad port in '" + s + "'");
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::Usage, "bad port in '" + s + "'");
  }
  ensure(port <= 65535, ErrorCode::Usage, "port out of range in '" + s + "'");
  return {s.substr(0, colon), static_cast<std::uint16_t>(port)};
}

inline sockaddr_in resolve(const Endpoint& ep) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  if (ep.host.empty() || ep.host == "0.0.0.0" || ep.host == "*") {
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    return addr;
  }
  if (::inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  int rc = ::getaddrinfo(ep.host.c_str(), nullptr, &hints, &res);
  ensure(rc == 0 && res != nullptr, ErrorCode::Unavailable, "cannot resolve host '" + ep.host + "'");
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  ::freeaddrinfo(res);
  return addr;
}

inline int remaining_ms(Clock::time_point deadline) {
  auto left = std::chrono::duration_cast<milliseconds>(deadline - Clock::now()).count();
  return left <= 0 ? 0 : static_cast<int>(left);
}

/// Owning file descriptor for a TCP socket.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Socket& operator=(Socket&& o) noexcept {
    if (this != &o) {
      close();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }

  void close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

  void shutdown() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
  }

  static Socket connect(const Endpoint& ep, milliseconds timeout) {
    sockaddr_in addr = resolve(ep);
    Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    ensure(s.valid(), ErrorCode::Unavailable, "socket(): " + std::string(std::strerror(errno)));
    int flags = ::fcntl(s.fd_, F_GETFL, 0);
    ::fcntl(s.fd_, F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(s.fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
    if (rc != 0) {
      ensure(errno == EINPROGRESS, ErrorCode::Unavailable,
             "connect " + ep.to_string() + ": " + std::strerror(errno));
      pollfd pfd{s.fd_, POLLOUT, 0};
      int pr = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
      ensure(pr > 0, ErrorCode::Unavailable, "connect " + ep.to_string() + ": timed out");
      int err = 0;
      socklen_t len = sizeof(err);
      ::getsockopt(s.fd_, SOL_SOCKET, SO_ERROR, &err, &len);
      ensure(err == 0, ErrorCode::Unavailable, "connect " + ep.to_string() + ": " + std::strerror(err));
    }
    ::fcntl(s.fd_, F_SETFL, flags);
    int one = 1;
    ::setsockopt(s.fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return s;
  }

  void send_all(std::span<const std::uint8_t> data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
      ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (n < 0 && errno == EINTR) continue;
      ensure(n > 0, ErrorCode::Unavailable, "send: " + std::string(std::strerror(errno)));
      sent += static_cast<std::size_t>(n);
    }
  }

  /// Reads whatever is available. 0 bytes means orderly EOF; nullopt means
  /// the deadline passed first.
  std::optional<std::size_t> recv_some(std::span<std::uint8_t> buf, Clock::time_point deadline) {
    for (;;) {
      pollfd pfd{fd_, POLLIN, 0};
      int pr = ::poll(&pfd, 1, remaining_ms(deadline));
      if (pr < 0 && errno == EINTR) continue;
      if (pr == 0) return std::nullopt;
      ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
      if (n < 0 && errno == EINTR) continue;
      if (n < 0) return std::size_t{0};  // reset by peer reads as EOF
      return static_cast<std::size_t>(n);
    }
  }

 private:
  int fd_ = -1;
};

/// A connection that speaks frames in both directions.
class Channel {
 public:
  Channel(Socket socket, u64 p) : socket_(std::move(socket)), decoder_(p) {}

  void send(const Message& m) {
    auto frame = proto::encode_frame(m);
    socket_.send_all(frame);
  }

  /// Next message, or nullopt on EOF. Throws Unavailable on timeout.
  std::optional<Message> receive(Clock::time_point deadline) {
    std::uint8_t buf[16384];
    for (;;) {
      if (auto m = decoder_.next()) return m;
      auto n = socket_.recv_some(buf, deadline);
      ensure(n.has_value(), ErrorCode::Unavailable, "timed out waiting for a response");
      if (*n == 0) {
        ensure(decoder_.buffered() == 0, ErrorCode::Malformed, "connection closed mid-frame");
        return std::nullopt;
      }
      decoder_.feed(std::span(buf, *n));
    }
  }

  Socket& socket() noexcept { return socket_; }

 private:
  Socket socket_;
  proto::FrameDecoder decoder_;
};

struct Timeouts {
  milliseconds connect{2000};
  milliseconds response{5000};
};

/// One request/response exchange on a fresh connection. Transport failures
/// surface as Unavailable; ERROR replies are returned, not thrown.
inline Message request(const std::string& address, const Message& m, const Timeouts& timeouts,
                       u64 p = kMersenne61) {
  Channel ch(Socket::connect(parse_endpoint(address), timeouts.connect), p);
  ch.send(m);
  auto reply = ch.receive(Clock::now() + timeouts.response);
  ensure(reply.has_value(), ErrorCode::Unavailable, "peer " + address + " closed without replying");
  ensure(reply->req_id == m.req_id, ErrorCode::Internal,
         "reply req_id '" + reply->req_id + "' does not match '" + m.req_id + "'");
  return std::move(*reply);
}

/// Accepts connections and hands every decoded frame to `handler`, writing
/// back its reply. Frames on one connection are processed strictly in order.
class FrameServer {
 public:
  using Handler = std::function<Message(const Message&)>;

  FrameServer(Handler handler, u64 p) : handler_(std::move(handler)), p_(p) {}
  FrameServer(const FrameServer&) = delete;
  FrameServer& operator=(const FrameServer&) = delete;
  ~FrameServer() { stop(); }

  /// Binds and starts accepting. Port 0 picks an ephemeral port.
  void start(const Endpoint& ep) {
    sockaddr_in addr = resolve(ep);
    listener_ = Socket(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    ensure(listener_.valid(), ErrorCode::Unavailable, "socket(): " + std::string(std::strerror(errno)));
    int one = 1;
    ::setsockopt(listener_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    ensure(::bind(listener_.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0, ErrorCode::Unavailable,
           "bind " + ep.to_string() + ": " + std::strerror(errno));
    ensure(::listen(listener_.fd(), 128) == 0, ErrorCode::Unavailable, "listen: " + std::string(std::strerror(errno)));
    socklen_t len = sizeof(addr);
    ::getsockname(listener_.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
    bound_ = {ep.host.empty() ? "127.0.0.1" : ep.host, ntohs(addr.sin_port)};
    stopping_ = false;
    wake_ = Socket(::eventfd(0, EFD_CLOEXEC | EFD_NONBLOCK));
    ensure(wake_.valid(), ErrorCode::Unavailable, "eventfd: " + std::string(std::strerror(errno)));
    acceptor_ = std::thread([this] { accept_loop(); });
  }

  /// Closes the listener and every open connection, then joins all threads.
  void stop() {
    if (!acceptor_.joinable()) return;
    stopping_ = true;
    const std::uint64_t one = 1;
    [[maybe_unused]] auto w = ::write(wake_.fd(), &one, sizeof(one));
    acceptor_.join();
    listener_.close();
    std::list<Connection> conns;
    {
      std::lock_guard lock(mu_);
      for (auto& c : connections_) c.socket->shutdown();
      conns.swap(connections_);
    }
    for (auto& c : conns) c.thread.join();
  }

  const Endpoint& endpoint() const noexcept { return bound_; }
  bool running() const noexcept { return acceptor_.joinable(); }

 private:
  struct Connection {
    std::shared_ptr<Socket> socket;
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };

  void accept_loop() {
    while (!stopping_) {
      pollfd pfd[2] = {{listener_.fd(), POLLIN, 0}, {wake_.fd(), POLLIN, 0}};
      int pr = ::poll(pfd, 2, 50);
      reap();
      if (pr <= 0 || !(pfd[0].revents & POLLIN)) continue;
      int fd = ::accept4(listener_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
      if (fd < 0) continue;
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      auto sock = std::make_shared<Socket>(fd);
      auto done = std::make_shared<std::atomic<bool>>(false);
      std::lock_guard lock(mu_);
      connections_.push_back({sock, std::thread([this, sock, done] {
                                serve(*sock);
                                *done = true;
                              }),
                              done});
    }
  }

  void reap() {
    std::lock_guard lock(mu_);
    for (auto it = connections_.begin(); it != connections_.end();) {
      if (*it->done) {
        it->thread.join();
        it = connections_.erase(it);
      } else {
        ++it;
      }
    }
  }

  void serve(Socket& sock) {
    proto::FrameDecoder decoder(p_);
    std::uint8_t buf[16384];
    auto reply = [&](const Message& m) {
      auto frame = proto::encode_frame(m);
      sock.send_all(frame);
    };
    try {
      while (!stopping_) {
        std::optional<Message> m;
        try {
          m = decoder.next();
        } catch (const Error& e) {
          // Undecodable frame: report and drop the connection, since the
          // request id is unknown.
          reply(proto::error_reply("", e));
          return;
        }
        if (m) {
          reply(dispatch(*m));
          continue;
        }
        auto n = sock.recv_some(buf, Clock::now() + milliseconds(100));
        if (!n) continue;
        if (*n == 0) return;
        decoder.feed(std::span(buf, *n));
      }
    } catch (const Error& e) {
      spdlog::debug("connection dropped: {}", e.what());
    }
  }

  Message dispatch(const Message& m) {
    try {
      return handler_(m);
    } catch (const Error& e) {
      return proto::error_reply(m.req_id, e);
    } catch (const std::exception& e) {
      return proto::error_reply(m.req_id, ErrorCode::Internal, e.what());
    }
  }

  Handler handler_;
  u64 p_;
  Socket listener_;
  Socket wake_;  // eventfd that interrupts the accept poll on stop()
  Endpoint bound_;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex mu_;
  std::list<Connection> connections_;
};

}  // namespace ssdb::net
