#include "otelbridge/otlp.hpp"

#include <stdexcept>

#include <httplib.h>

#include "opentelemetry/proto/collector/trace/v1/trace_service.pb.h"

namespace otelbridge::exporter {

namespace pb = opentelemetry::proto;

std::string encode_otlp(const SpanBatch& batch) {
  pb::collector::trace::v1::ExportTraceServiceRequest request;
  for (const auto& [service_name, spans] : batch.group_by_service()) {
    pb::trace::v1::ResourceSpans* resource_spans = request.add_resource_spans();
    pb::common::v1::KeyValue* service_attr = resource_spans->mutable_resource()->add_attributes();
    service_attr->set_key("service.name");
    service_attr->mutable_value()->set_string_value(service_name);
    pb::trace::v1::ScopeSpans* scope_spans = resource_spans->add_scope_spans();
    scope_spans->mutable_scope()->set_name("otel-bridge");
    for (const Span* span : spans) {
      pb::trace::v1::Span* pb_span = scope_spans->add_spans();
      pb_span->set_trace_id(span->trace_id.data(), span->trace_id.size());
      pb_span->set_span_id(span->span_id.data(), span->span_id.size());
      if (span->parent_span_id.has_value()) {
        pb_span->set_parent_span_id(span->parent_span_id->data(), span->parent_span_id->size());
      }
      pb_span->set_name(span->name);
      pb_span->set_kind(pb::trace::v1::Span::SPAN_KIND_INTERNAL);
      pb_span->set_start_time_unix_nano(static_cast<std::uint64_t>(span->start_ns));
      pb_span->set_end_time_unix_nano(static_cast<std::uint64_t>(span->end_ns));
      for (const auto& [key, value] : span->attributes) {
        pb::common::v1::KeyValue* attr = pb_span->add_attributes();
        attr->set_key(key);
        attr->mutable_value()->set_string_value(value);
      }
    }
  }
  return request.SerializeAsString();
}

OtlpHttpExporter::OtlpHttpExporter(OtlpExporterConfig config) : config_(std::move(config)) {
  auto parsed = parse_url(config_.endpoint);
  if (!parsed.has_value()) {
    throw std::invalid_argument("invalid otlp endpoint: " + config_.endpoint);
  }
  url_ = std::move(*parsed);
  if (url_.path == "/") url_.path = "/v1/traces";
  if (!config_.sleeper) config_.sleeper = real_sleeper();
}

ExportResult OtlpHttpExporter::export_batch(const SpanBatch& batch) {
  const std::string body = encode_otlp(batch);
  return post_with_retries(batch.spans.size(), config_.retry, config_.sleeper, [&] {
    httplib::Client client(url_.host, url_.port);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(
        config_.connect_timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(config_.io_timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::seconds>(config_.io_timeout));
    HttpPostOutcome outcome;
    auto response = client.Post(url_.path, body, "application/x-protobuf");
    if (response) {
      outcome.transport_ok = true;
      outcome.status = response->status;
    } else {
      outcome.error = "otlp POST failed: " + httplib::to_string(response.error());
    }
    return outcome;
  });
}

}  // namespace otelbridge::exporter
