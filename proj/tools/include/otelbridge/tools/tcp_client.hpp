#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace otelbridge::tools {

struct ConnectionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Blocking IPv4/IPv6 client socket; what the emitter and replayer write to.
class TcpClient {
 public:
  TcpClient(const std::string& host, std::uint16_t port);  // throws ConnectionError
  ~TcpClient();

  TcpClient(const TcpClient&) = delete;
  TcpClient& operator=(const TcpClient&) = delete;

  void send_all(const std::uint8_t* data, std::size_t size);  // throws ConnectionError
  void close();

 private:
  int fd_ = -1;
};

}  // namespace otelbridge::tools
