#include "proxguard/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "proxguard/error.hpp"
#include "proxguard/transport.hpp"

namespace proxguard {

namespace {

// Frames above this size are rejected before allocation.
constexpr std::uint32_t kMaxFrameBytes = 64U << 20;

std::string errno_text() { return std::strerror(errno); }

bool read_exact(int fd, std::uint8_t* buf, std::size_t n, bool allow_eof) {
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd, buf + got, n - got, 0);
    if (r == 0) {
      if (allow_eof && got == 0) return false;
      throw IoError("connection closed mid-frame");
    }
    if (r < 0) {
      if (errno == EINTR) continue;
      throw IoError("recv failed: " + errno_text());
    }
    got += static_cast<std::size_t>(r);
  }
  return true;
}

addrinfo* resolve(const std::string& host, std::uint16_t port, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &res);
      rc != 0) {
    throw IoError("cannot resolve '" + host + "': " + gai_strerror(rc));
  }
  return res;
}

}  // namespace

bool read_frame(int fd, Bytes& out) {
  std::uint8_t header[4];
  if (!read_exact(fd, header, 4, true)) return false;
  const std::uint32_t length = frame_length_prefix(header);
  if (length == 0 || length > kMaxFrameBytes) {
    throw DecodeError("frame length " + std::to_string(length) + " out of range");
  }
  out.resize(std::size_t{length} + 4);
  std::memcpy(out.data(), header, 4);
  read_exact(fd, out.data() + 4, length, false);
  return true;
}

void write_all(int fd, const Bytes& data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t w = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw IoError("send failed: " + errno_text());
    }
    sent += static_cast<std::size_t>(w);
  }
}

TcpServer::TcpServer(Server& server, const std::string& host, std::uint16_t port)
    : server_(server) {
  addrinfo* res = resolve(host, port, true);
  listen_fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (listen_fd_ < 0) {
    ::freeaddrinfo(res);
    throw IoError("socket failed: " + errno_text());
  }
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(listen_fd_, res->ai_addr, res->ai_addrlen) != 0 || ::listen(listen_fd_, 64) != 0) {
    const std::string reason = errno_text();
    ::freeaddrinfo(res);
    ::close(listen_fd_);
    throw IoError("cannot bind " + host + ":" + std::to_string(port) + ": " + reason);
  }
  ::freeaddrinfo(res);

  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
}

TcpServer::~TcpServer() {
  stop();
  std::list<std::thread> sessions;
  {
    std::lock_guard lock(sessions_mutex_);
    sessions.swap(sessions_);
  }
  for (auto& t : sessions) t.join();
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void TcpServer::stop() {
  if (stopping_.exchange(true)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  std::lock_guard lock(sessions_mutex_);
  for (const int fd : session_fds_) ::shutdown(fd, SHUT_RDWR);
}

void TcpServer::serve() {
  while (!stopping_) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, 200);
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw IoError("poll failed: " + errno_text());
    }
    if (ready == 0 || stopping_) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR || errno == ECONNABORTED || stopping_) continue;
      throw IoError("accept failed: " + errno_text());
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    std::lock_guard lock(sessions_mutex_);
    session_fds_.push_back(fd);
    sessions_.emplace_back([this, fd] { session(fd); });
  }
}

void TcpServer::session(int fd) {
  try {
    Bytes frame;
    while (!stopping_ && read_frame(fd, frame)) write_all(fd, handle_frame(server_, frame));
  } catch (const Error&) {
    // connection-level failure ends this session only
  }
  std::lock_guard lock(sessions_mutex_);
  session_fds_.remove(fd);
  ::close(fd);
}

TcpClient::TcpClient(const std::string& host, std::uint16_t port) {
  addrinfo* res = resolve(host, port, false);
  fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd_ < 0 || ::connect(fd_, res->ai_addr, res->ai_addrlen) != 0) {
    const std::string reason = errno_text();
    ::freeaddrinfo(res);
    if (fd_ >= 0) ::close(fd_);
    throw IoError("cannot connect to " + host + ":" + std::to_string(port) + ": " + reason);
  }
  ::freeaddrinfo(res);
  const int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

TcpClient::~TcpClient() {
  if (fd_ >= 0) ::close(fd_);
}

Bytes TcpClient::roundtrip(const Bytes& frame) {
  write_all(fd_, frame);
  Bytes reply;
  if (!read_frame(fd_, reply)) throw IoError("server closed the connection");
  return reply;
}

}  // namespace proxguard
