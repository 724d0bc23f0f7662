#pragma once

#include <atomic>
#include <cstdint>
#include <list>
#include <mutex>
#include <string>
#include <thread>

#include "proxguard/messages.hpp"

namespace proxguard {

class Server;

// Blocking TCP front end for a Server: one thread per connection, frames in,
// frames out.
class TcpServer {
 public:
  // Binds host:port (port 0 picks an ephemeral port). Throws IoError.
  TcpServer(Server& server, const std::string& host, std::uint16_t port);
  ~TcpServer();
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  std::uint16_t port() const { return port_; }
  // Accepts until stop() is called from any thread.
  void serve();
  void stop();

 private:
  void session(int fd);

  Server& server_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::mutex sessions_mutex_;
  std::list<std::thread> sessions_;
  std::list<int> session_fds_;
};

class TcpClient {
 public:
  // Throws IoError if the connection fails.
  TcpClient(const std::string& host, std::uint16_t port);
  ~TcpClient();
  TcpClient(const TcpClient&) = delete;
  TcpClient& operator=(const TcpClient&) = delete;

  // Sends one frame and blocks for the reply frame.
  Bytes roundtrip(const Bytes& frame);

 private:
  int fd_ = -1;
};

// Reads one length-prefixed frame; returns false on orderly EOF before the
// first byte. Throws IoError/DecodeError otherwise.
bool read_frame(int fd, Bytes& out);
void write_all(int fd, const Bytes& data);

}  // namespace proxguard
