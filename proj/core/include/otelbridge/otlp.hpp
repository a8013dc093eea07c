#pragma once

#include <string>

#include "otelbridge/exporters.hpp"

namespace otelbridge::exporter {

/// Serialized ExportTraceServiceRequest: one resource-spans entry per service
/// (resource attribute "service.name"), span times in nanoseconds.
std::string encode_otlp(const SpanBatch& batch);

struct OtlpExporterConfig {
  /// OTLP/HTTP traces endpoint; a bare origin gets "/v1/traces" appended.
  std::string endpoint = "http://localhost:4318/v1/traces";
  RetryPolicy retry;
  Sleeper sleeper;  // defaults to real sleeping
  std::chrono::milliseconds connect_timeout{2000};
  std::chrono::milliseconds io_timeout{5000};
};

class OtlpHttpExporter : public SpanExporter {
 public:
  /// Throws std::invalid_argument on an unparseable endpoint URL.
  explicit OtlpHttpExporter(OtlpExporterConfig config = {});

  ExportResult export_batch(const SpanBatch& batch) override;
  std::string_view backend_name() const override { return "otlp"; }

 private:
  OtlpExporterConfig config_;
  ParsedUrl url_;
};

}  // namespace otelbridge::exporter
