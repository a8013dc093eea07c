#include "otelbridge/zipkin.hpp"

#include <cctype>
#include <stdexcept>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace otelbridge::exporter {

namespace {

std::string lowercase(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::int64_t micros_floor(std::int64_t ns) { return ns / 1000; }

std::int64_t duration_micros(std::int64_t delta_ns) {
  const std::int64_t rounded = (delta_ns + 500) / 1000;
  return rounded < 1 ? 1 : rounded;
}

}  // namespace

std::string encode_zipkin(const SpanBatch& batch) {
  nlohmann::ordered_json array = nlohmann::ordered_json::array();
  for (const Span& span : batch.spans) {
    nlohmann::ordered_json json;
    json["traceId"] = to_hex(span.trace_id);
    if (span.parent_span_id.has_value()) {
      json["parentId"] = to_hex(*span.parent_span_id);
    }
    json["id"] = to_hex(span.span_id);
    json["name"] = lowercase(span.name);
    json["timestamp"] = micros_floor(span.start_ns);
    json["duration"] = duration_micros(span.end_ns - span.start_ns);
    json["localEndpoint"] = nlohmann::ordered_json{{"serviceName", span.service_name}};
    nlohmann::ordered_json tags = nlohmann::ordered_json::object();
    for (const auto& [key, value] : span.attributes) tags[key] = value;
    json["tags"] = std::move(tags);
    array.push_back(std::move(json));
  }
  return array.dump();
}

ZipkinExporter::ZipkinExporter(ZipkinExporterConfig config) : config_(std::move(config)) {
  auto parsed = parse_url(config_.endpoint);
  if (!parsed.has_value()) {
    throw std::invalid_argument("invalid zipkin endpoint: " + config_.endpoint);
  }
  url_ = std::move(*parsed);
  if (!config_.sleeper) config_.sleeper = real_sleeper();
}

ExportResult ZipkinExporter::export_batch(const SpanBatch& batch) {
  const std::string body = encode_zipkin(batch);
  return post_with_retries(batch.spans.size(), config_.retry, config_.sleeper, [&] {
    httplib::Client client(url_.host, url_.port);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(
        config_.connect_timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(config_.io_timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::seconds>(config_.io_timeout));
    HttpPostOutcome outcome;
    auto response = client.Post(url_.path, body, "application/json");
    if (response) {
      outcome.transport_ok = true;
      outcome.status = response->status;
    } else {
      outcome.error = "zipkin POST failed: " + httplib::to_string(response.error());
    }
    return outcome;
  });
}

}  // namespace otelbridge::exporter
