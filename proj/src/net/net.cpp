#include "cgn/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "cgn/error.hpp"

namespace cgn::net {
namespace {

std::string errno_text(int err) { return std::strerror(err); }

void set_nonblocking(int fd, bool on) {
  int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, on ? (flags | O_NONBLOCK) : (flags & ~O_NONBLOCK));
}

int poll_one(int fd, short events, std::chrono::milliseconds timeout) {
  pollfd p{fd, events, 0};
  for (;;) {
    int rc = ::poll(&p, 1, int(timeout.count()));
    if (rc < 0 && errno == EINTR) continue;
    return rc;
  }
}

}  // namespace

HostPort HostPort::parse(std::string_view text) {
  auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == text.size()) {
    throw ValidationError("expected host:port, got '" + std::string(text) + "'");
  }
  std::string host(text.substr(0, colon));
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  long port = 0;
  for (char c : text.substr(colon + 1)) {
    if (c < '0' || c > '9') throw ValidationError("bad port in '" + std::string(text) + "'");
    port = port * 10 + (c - '0');
    if (port > 65535) break;
  }
  if (port < 0 || port > 65535) throw ValidationError("port out of range in '" + std::string(text) + "'");
  return {host, std::uint16_t(port)};
}

std::string HostPort::str() const {
  if (host.find(':') != std::string::npos) return "[" + host + "]:" + std::to_string(port);
  return host + ":" + std::to_string(port);
}

std::string SocketAddress::str() const {
  char buf[INET6_ADDRSTRLEN] = {};
  if (storage.ss_family == AF_INET) {
    auto* a = reinterpret_cast<const sockaddr_in*>(&storage);
    ::inet_ntop(AF_INET, &a->sin_addr, buf, sizeof buf);
    return std::string(buf) + ":" + std::to_string(ntohs(a->sin_port));
  }
  if (storage.ss_family == AF_INET6) {
    auto* a = reinterpret_cast<const sockaddr_in6*>(&storage);
    ::inet_ntop(AF_INET6, &a->sin6_addr, buf, sizeof buf);
    return "[" + std::string(buf) + "]:" + std::to_string(ntohs(a->sin6_port));
  }
  return "?";
}

std::vector<SocketAddress> resolve(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  std::vector<SocketAddress> out;
  if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0) return out;
  for (auto* ai = res; ai != nullptr; ai = ai->ai_next) {
    SocketAddress sa;
    std::memcpy(&sa.storage, ai->ai_addr, ai->ai_addrlen);
    sa.length = socklen_t(ai->ai_addrlen);
    out.push_back(sa);
  }
  ::freeaddrinfo(res);
  return out;
}

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.release();
  }
  return *this;
}

int Socket::release() noexcept {
  int fd = fd_;
  fd_ = -1;
  return fd;
}

void Socket::close() noexcept {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void Socket::shutdown() noexcept {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

std::size_t Socket::read_some(std::span<std::uint8_t> buf, std::chrono::milliseconds timeout) {
  int rc = poll_one(fd_, POLLIN, timeout);
  if (rc == 0) throw TimeoutError("read timed out");
  if (rc < 0) throw NetError("poll: " + errno_text(errno));
  for (;;) {
    ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
    if (n >= 0) return std::size_t(n);
    if (errno == EINTR) continue;
    throw NetError("recv: " + errno_text(errno));
  }
}

void Socket::write_all(std::span<const std::uint8_t> data) {
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw NetError("send: " + errno_text(errno));
    }
    off += std::size_t(n);
  }
}

void Socket::set_send_buffer(int bytes) noexcept {
  if (fd_ >= 0 && bytes > 0) ::setsockopt(fd_, SOL_SOCKET, SO_SNDBUF, &bytes, sizeof bytes);
}

std::uint32_t Socket::observed_receive_window() const noexcept {
#if defined(TCP_INFO) && defined(__linux__)
  tcp_info info{};
  socklen_t len = sizeof info;
  if (fd_ >= 0 && ::getsockopt(fd_, IPPROTO_TCP, TCP_INFO, &info, &len) == 0) return info.tcpi_rcv_space;
#endif
  return 0;
}

Socket connect(const SocketAddress& addr, std::chrono::milliseconds timeout) {
  Socket s(::socket(addr.storage.ss_family, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!s.valid()) throw NetError("socket: " + errno_text(errno));
  set_nonblocking(s.fd(), true);
  int rc = ::connect(s.fd(), reinterpret_cast<const sockaddr*>(&addr.storage), addr.length);
  if (rc != 0) {
    if (errno != EINPROGRESS) throw NetError("connect " + addr.str() + ": " + errno_text(errno));
    rc = poll_one(s.fd(), POLLOUT, timeout);
    if (rc == 0) throw TimeoutError("connect " + addr.str() + " timed out");
    if (rc < 0) throw NetError("poll: " + errno_text(errno));
    int err = 0;
    socklen_t len = sizeof err;
    ::getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) throw NetError("connect " + addr.str() + ": " + errno_text(err));
  }
  set_nonblocking(s.fd(), false);
  int one = 1;
  ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return s;
}

Socket connect(const HostPort& hp, std::chrono::milliseconds timeout) {
  auto addrs = resolve(hp.host, hp.port);
  if (addrs.empty()) throw NetError("cannot resolve " + hp.host);
  std::string last;
  for (const auto& a : addrs) {
    try {
      return connect(a, timeout);
    } catch (const NetError& e) {
      last = e.what();
    }
  }
  throw NetError(last);
}

Listener::Listener(const HostPort& where, int backlog) {
  auto addrs = resolve(where.host, where.port);
  if (addrs.empty()) throw NetError("cannot resolve listen address " + where.host);
  const auto& a = addrs.front();
  sock_ = Socket(::socket(a.storage.ss_family, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!sock_.valid()) throw NetError("socket: " + errno_text(errno));
  int one = 1;
  ::setsockopt(sock_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(sock_.fd(), reinterpret_cast<const sockaddr*>(&a.storage), a.length) != 0) {
    throw NetError("bind " + where.str() + ": " + errno_text(errno));
  }
  if (::listen(sock_.fd(), backlog) != 0) throw NetError("listen: " + errno_text(errno));
  sockaddr_storage bound{};
  socklen_t len = sizeof bound;
  ::getsockname(sock_.fd(), reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = bound.ss_family == AF_INET6 ? ntohs(reinterpret_cast<sockaddr_in6*>(&bound)->sin6_port)
                                      : ntohs(reinterpret_cast<sockaddr_in*>(&bound)->sin_port);
}

std::optional<Socket> Listener::accept(std::chrono::milliseconds timeout) {
  if (!sock_.valid()) return std::nullopt;
  int rc = poll_one(sock_.fd(), POLLIN, timeout);
  if (rc <= 0) return std::nullopt;
  int fd = ::accept4(sock_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
  if (fd < 0) return std::nullopt;
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return Socket(fd);
}

}  // namespace cgn::net
