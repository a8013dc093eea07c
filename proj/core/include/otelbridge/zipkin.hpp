#pragma once

#include <string>

#include "otelbridge/exporters.hpp"

namespace otelbridge::exporter {

/// Zipkin v2 JSON array for POST /api/v2/spans. Timestamps/durations in
/// microseconds: timestamp floors, duration rounds half-up with a 1 µs floor.
std::string encode_zipkin(const SpanBatch& batch);

struct ZipkinExporterConfig {
  std::string endpoint = "http://localhost:9411/api/v2/spans";
  RetryPolicy retry;
  Sleeper sleeper;  // defaults to real sleeping
  std::chrono::milliseconds connect_timeout{2000};
  std::chrono::milliseconds io_timeout{5000};
};

class ZipkinExporter : public SpanExporter {
 public:
  /// Throws std::invalid_argument on an unparseable endpoint URL.
  explicit ZipkinExporter(ZipkinExporterConfig config = {});

  ExportResult export_batch(const SpanBatch& batch) override;
  std::string_view backend_name() const override { return "zipkin"; }

 private:
  ZipkinExporterConfig config_;
  ParsedUrl url_;
};

}  // namespace otelbridge::exporter
