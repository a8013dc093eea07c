#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "otelbridge/span.hpp"

namespace otelbridge::exporter {

struct ExportResult {
  std::size_t accepted = 0;
  std::size_t rejected = 0;   // endpoint refused the payload; retrying is pointless
  bool retriable = false;     // transport kept failing; the batch may be retried later
  std::string error;

  bool ok() const { return !retriable && rejected == 0; }
};

struct RetryPolicy {
  std::chrono::milliseconds initial_delay{1000};
  double factor = 2.0;
  int max_retries = 5;
};

/// Injection point so tests observe backoff without real sleeping.
using Sleeper = std::function<void(std::chrono::milliseconds)>;

Sleeper real_sleeper();

class SpanExporter {
 public:
  virtual ~SpanExporter() = default;
  virtual ExportResult export_batch(const SpanBatch& batch) = 0;
  virtual std::string_view backend_name() const = 0;
};

/// One JSON object per span per line; the demo backend that needs no collector.
class StdoutExporter : public SpanExporter {
 public:
  explicit StdoutExporter(std::ostream& out);
  StdoutExporter();

  ExportResult export_batch(const SpanBatch& batch) override;
  std::string_view backend_name() const override { return "stdout"; }

 private:
  std::ostream& out_;
};

std::string span_json_line(const Span& span);

struct ParsedUrl {
  std::string scheme;
  std::string host;
  int port = 0;
  std::string path;  // always starts with '/'
};

std::optional<ParsedUrl> parse_url(std::string_view url);

struct HttpPostOutcome {
  bool transport_ok = false;  // any HTTP response counts, whatever the status
  int status = 0;
  std::string error;
};

/// Shared send loop: 2xx accepts the batch, 4xx (except 429) rejects it,
/// anything else retries on the backoff schedule until attempts run out.
ExportResult post_with_retries(std::size_t span_count, const RetryPolicy& policy,
                               const Sleeper& sleeper,
                               const std::function<HttpPostOutcome()>& attempt);

}  // namespace otelbridge::exporter
