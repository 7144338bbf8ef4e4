#pragma once

// Thin POSIX TCP helpers: RAII sockets, connect with timeout, listeners.

#include <sys/socket.h>

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cgn::net {

class NetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TimeoutError : public NetError {
 public:
  using NetError::NetError;
};

struct HostPort {
  std::string host;
  std::uint16_t port = 0;

  /// Parses "host:port" (IPv6 hosts in brackets). Throws ValidationError.
  static HostPort parse(std::string_view text);
  std::string str() const;
};

struct SocketAddress {
  sockaddr_storage storage{};
  socklen_t length = 0;

  std::string str() const;
};

/// Resolves host:port to TCP addresses. Empty result means unresolvable.
std::vector<SocketAddress> resolve(const std::string& host, std::uint16_t port);

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) noexcept : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }
  int release() noexcept;
  void close() noexcept;
  /// Half-closes both directions; wakes up a thread blocked in read.
  void shutdown() noexcept;

  /// Reads up to buf.size() bytes; 0 means orderly EOF. Throws TimeoutError.
  std::size_t read_some(std::span<std::uint8_t> buf, std::chrono::milliseconds timeout);
  void write_all(std::span<const std::uint8_t> data);
  void set_send_buffer(int bytes) noexcept;
  /// Receive-side window estimate from TCP_INFO, 0 when unavailable.
  std::uint32_t observed_receive_window() const noexcept;

 private:
  int fd_ = -1;
};

/// Non-blocking connect bounded by timeout. Throws TimeoutError or NetError.
Socket connect(const SocketAddress& addr, std::chrono::milliseconds timeout);
Socket connect(const HostPort& hp, std::chrono::milliseconds timeout);

class Listener {
 public:
  /// Binds and listens; port 0 picks an ephemeral port.
  explicit Listener(const HostPort& where, int backlog = 64);

  std::uint16_t port() const noexcept { return port_; }
  /// Waits up to `timeout` for a connection; nullopt on timeout or after stop().
  std::optional<Socket> accept(std::chrono::milliseconds timeout);
  /// Unblocks pending accept() calls. The descriptor is closed on destruction.
  void stop() noexcept { sock_.shutdown(); }

 private:
  Socket sock_;
  std::uint16_t port_ = 0;
};

}  // namespace cgn::net
