#pragma once

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

#include "otelbridge/exporters.hpp"
#include "otelbridge/pipeline.hpp"

namespace otelbridge::tools {

struct BridgeConfig {
  std::string bind_address = "0.0.0.0";
  std::uint16_t listen_port = 9876;  // 0 picks a free port
  std::uint16_t stats_port = 8787;   // 0 picks a free port
  std::string exporter = "stdout";   // otlp | zipkin | stdout
  std::string otlp_endpoint = "http://localhost:4318/v1/traces";
  std::string zipkin_endpoint = "http://localhost:9411/api/v2/spans";
  std::int64_t trace_timeout_ms = 5000;
  std::size_t max_buffered_traces = 10000;
  std::size_t max_trace_size = 100000;
  int shards = 4;
  std::size_t queue_capacity = pipeline::kDefaultQueueCapacity;
  std::size_t read_buffer_bytes = 64 * 1024;
  std::string log_level = "info";

  // Test hooks; the CLI never sets these.
  std::ostream* stdout_sink = nullptr;  // stdout backend target, std::cout when null
  bool enable_stats_server = true;
  exporter::Sleeper export_sleeper;  // retry backoff sleeper, real when null

  /// Error text when the configuration cannot start a daemon.
  std::optional<std::string> validate() const;
};

struct BridgeCounters {
  std::atomic<std::uint64_t> records_in{0};
  std::atomic<std::uint64_t> executions{0};
  std::atomic<std::uint64_t> traces_complete{0};
  std::atomic<std::uint64_t> traces_dropped{0};
  std::atomic<std::uint64_t> spans_exported{0};
  std::atomic<std::uint64_t> export_failures{0};
};

/// The plaintext body served at GET /stats: one key=value line per counter.
std::string render_stats(const BridgeCounters& counters);

/// The transformer daemon: TCP ingest -> transform -> reconstruct -> export,
/// with a stats endpoint on the side.
class TransformerDaemon {
 public:
  explicit TransformerDaemon(BridgeConfig config);
  ~TransformerDaemon();

  TransformerDaemon(const TransformerDaemon&) = delete;
  TransformerDaemon& operator=(const TransformerDaemon&) = delete;

  /// Binds ports and starts the pipeline. Throws std::invalid_argument on a
  /// config validate() failure and wire::BindError when a port is taken.
  void start();

  /// Stops ingest and closes the feed; the pipeline then drains. Idempotent.
  void request_stop();

  /// Blocks until the pipeline has drained; returns the process exit code
  /// (0 clean, 1 when a stage failed).
  int wait();

  /// True once the pipeline has drained (with or without request_stop()).
  bool finished() const;

  std::uint16_t listen_port() const;  // actual, available after start()
  std::uint16_t stats_port() const;   // actual, available after start()

  const BridgeCounters& counters() const;

  /// Stage-level statistics; meaningful after wait().
  const pipeline::TerminationReport& report() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace otelbridge::tools
