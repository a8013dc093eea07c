#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>

#include "otelbridge/records.hpp"

namespace otelbridge::wire {

struct BindError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ServerConfig {
  std::string bind_address = "0.0.0.0";
  std::uint16_t port = 9876;  // 0 picks a free port; see port()
  std::size_t read_buffer_bytes = 64 * 1024;
};

struct ServerCounters {
  std::atomic<std::uint64_t> connections_accepted{0};
  std::atomic<std::uint64_t> connections_closed{0};
  std::atomic<std::uint64_t> records_decoded{0};
  std::atomic<std::uint64_t> registry_entries{0};
  std::atomic<std::uint64_t> decode_errors{0};
  std::atomic<std::uint64_t> bytes_read{0};
};

/// Receives a decoded record in per-connection arrival order. May block (that
/// is the ingest backpressure); returning false tells the connection that
/// downstream is gone and it should close.
using RecordSink = std::function<bool(records::MonitoringRecord&&)>;

/// Kieker-style TCP listener: one reader thread per connection, each with its
/// own string registry. A decode error (including a frame larger than the
/// read buffer, or a peer vanishing mid-frame) closes only that connection.
class TcpIngestServer {
 public:
  TcpIngestServer(ServerConfig config, RecordSink sink);
  ~TcpIngestServer();

  TcpIngestServer(const TcpIngestServer&) = delete;
  TcpIngestServer& operator=(const TcpIngestServer&) = delete;

  /// Binds and starts accepting. Throws BindError if the port is taken.
  void start();

  /// Stops accepting, tears down connections, joins all threads. Idempotent.
  void stop();

  /// Actual bound port, available after start().
  std::uint16_t port() const;

  const ServerCounters& counters() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace otelbridge::wire
