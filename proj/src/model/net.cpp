#include "scope_refine/model/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

namespace scope_refine::model {

namespace {

std::string errno_text(const std::string& what) { return what + ": " + std::strerror(errno); }

void write_all(int fd, const std::string& data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw NetError(errno_text("send"));
    }
    sent += static_cast<std::size_t>(n);
  }
}

// Reads until a newline is buffered. Returns false on orderly EOF.
bool fill_line(int fd, std::string& buffer, std::size_t& newline) {
  char chunk[4096];
  while ((newline = buffer.find('\n')) == std::string::npos) {
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n == 0) return false;
    if (n < 0) {
      if (errno == EINTR) continue;
      throw NetError(errno_text("recv"));
    }
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
  return true;
}

}  // namespace

Endpoint parse_endpoint(const std::string& text) {
  Endpoint ep;
  std::string port_text = text;
  const auto colon = text.rfind(':');
  if (colon != std::string::npos) {
    if (colon > 0) ep.host = text.substr(0, colon);
    port_text = text.substr(colon + 1);
  }
  unsigned value = 0;
  const auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), value);
  if (port_text.empty() || ec != std::errc() || ptr != port_text.data() + port_text.size() || value > 65535) {
    throw NetError("invalid endpoint '" + text + "', expected host:port");
  }
  ep.port = static_cast<std::uint16_t>(value);
  return ep;
}

LineConnection::LineConnection(const Endpoint& endpoint) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  const std::string port = std::to_string(endpoint.port);
  if (::getaddrinfo(endpoint.host.c_str(), port.c_str(), &hints, &found) != 0 || !found) {
    throw NetError("cannot resolve " + endpoint.host);
  }
  for (addrinfo* a = found; a; a = a->ai_next) {
    fd_ = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd_ < 0) continue;
    if (::connect(fd_, a->ai_addr, a->ai_addrlen) == 0) break;
    ::close(fd_);
    fd_ = -1;
  }
  ::freeaddrinfo(found);
  if (fd_ < 0) throw NetError("cannot connect to " + endpoint.host + ":" + port);
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

LineConnection::~LineConnection() {
  if (fd_ >= 0) ::close(fd_);
}

void LineConnection::send_line(const std::string& line) { write_all(fd_, line + "\n"); }

std::string LineConnection::read_line() {
  std::size_t newline = 0;
  if (!fill_line(fd_, buffer_, newline)) throw NetError("connection closed by peer");
  std::string line = buffer_.substr(0, newline);
  buffer_.erase(0, newline + 1);
  return line;
}

LineServer::LineServer(const Endpoint& endpoint, Handler handler) : handler_(std::move(handler)) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw NetError(errno_text("socket"));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(endpoint.port);
  if (::inet_pton(AF_INET, endpoint.host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw NetError("listen host must be an IPv4 address: " + endpoint.host);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      ::listen(listen_fd_, 8) != 0) {
    const std::string why = errno_text("bind");
    ::close(listen_fd_);
    throw NetError(why);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

LineServer::~LineServer() {
  stop();
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void LineServer::serve() {
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int ready = ::poll(&p, 1, 100);
    if (ready <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    try {
      serve_connection(fd);
    } catch (const NetError&) {
      // peer vanished mid-write; keep serving others
    }
    ::close(fd);
  }
}

void LineServer::serve_connection(int fd) {
  std::string buffer;
  while (!stopping_) {
    pollfd p{fd, POLLIN, 0};
    if (::poll(&p, 1, 100) <= 0) continue;
    std::size_t newline = 0;
    if (!fill_line(fd, buffer, newline)) return;
    while (newline != std::string::npos) {
      std::string line = buffer.substr(0, newline);
      buffer.erase(0, newline + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      write_all(fd, handler_(line) + "\n");
      newline = buffer.find('\n');
    }
  }
}

void LineServer::start_background() {
  worker_ = std::thread([this] { serve(); });
}

void LineServer::stop() {
  stopping_ = true;
  if (worker_.joinable()) worker_.join();
}

}  // namespace scope_refine::model
