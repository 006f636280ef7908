#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>

namespace scope_refine::model {

class NetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

// "host:port" or ":port"/"port" for loopback. Throws NetError.
Endpoint parse_endpoint(const std::string& text);

// Blocking newline-delimited client over TCP.
class LineConnection {
 public:
  explicit LineConnection(const Endpoint& endpoint);
  ~LineConnection();
  LineConnection(const LineConnection&) = delete;
  LineConnection& operator=(const LineConnection&) = delete;

  void send_line(const std::string& line);
  // Next line without its terminator. Throws NetError on EOF.
  std::string read_line();
  std::string round_trip(const std::string& line) {
    send_line(line);
    return read_line();
  }

 private:
  int fd_ = -1;
  std::string buffer_;
};

// Serves one connection at a time; every received line is answered with
// handler(line) followed by a newline.
class LineServer {
 public:
  using Handler = std::function<std::string(const std::string&)>;

  // Port 0 picks a free port; see port().
  LineServer(const Endpoint& endpoint, Handler handler);
  ~LineServer();
  LineServer(const LineServer&) = delete;
  LineServer& operator=(const LineServer&) = delete;

  std::uint16_t port() const { return port_; }

  // Blocks until stop() is called.
  void serve();
  void start_background();
  void stop();

 private:
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  Handler handler_;
  std::atomic<bool> stopping_{false};
  std::thread worker_;

  void serve_connection(int fd);
};

}  // namespace scope_refine::model
