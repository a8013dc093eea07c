#include "otelbridge/exporters.hpp"

#include <charconv>
#include <cmath>
#include <iostream>
#include <thread>

#include <nlohmann/json.hpp>

namespace otelbridge::exporter {

Sleeper real_sleeper() {
  return [](std::chrono::milliseconds delay) { std::this_thread::sleep_for(delay); };
}

StdoutExporter::StdoutExporter(std::ostream& out) : out_(out) {}
StdoutExporter::StdoutExporter() : out_(std::cout) {}

std::string span_json_line(const Span& span) {
  nlohmann::ordered_json json;
  json["traceId"] = to_hex(span.trace_id);
  json["spanId"] = to_hex(span.span_id);
  if (span.parent_span_id.has_value()) {
    json["parentSpanId"] = to_hex(*span.parent_span_id);
  }
  json["name"] = span.name;
  json["startNs"] = span.start_ns;
  json["endNs"] = span.end_ns;
  json["serviceName"] = span.service_name;
  nlohmann::ordered_json attributes = nlohmann::ordered_json::object();
  for (const auto& [key, value] : span.attributes) attributes[key] = value;
  json["attributes"] = std::move(attributes);
  return json.dump();
}

ExportResult StdoutExporter::export_batch(const SpanBatch& batch) {
  ExportResult result;
  for (const Span& span : batch.spans) {
    out_ << span_json_line(span) << '\n';
    ++result.accepted;
  }
  out_.flush();
  return result;
}

std::optional<ParsedUrl> parse_url(std::string_view url) {
  ParsedUrl parsed;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos || scheme_end == 0) return std::nullopt;
  parsed.scheme = std::string(url.substr(0, scheme_end));
  if (parsed.scheme != "http" && parsed.scheme != "https") return std::nullopt;
  std::string_view rest = url.substr(scheme_end + 3);
  const auto path_start = rest.find('/');
  std::string_view authority = rest.substr(0, path_start);
  parsed.path = path_start == std::string_view::npos ? "/" : std::string(rest.substr(path_start));
  const auto colon = authority.rfind(':');
  if (colon == std::string_view::npos) {
    parsed.host = std::string(authority);
    parsed.port = parsed.scheme == "https" ? 443 : 80;
  } else {
    parsed.host = std::string(authority.substr(0, colon));
    std::string_view port_text = authority.substr(colon + 1);
    int port = 0;
    const auto [ptr, ec] =
        std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc() || ptr != port_text.data() + port_text.size() || port <= 0 ||
        port > 65535) {
      return std::nullopt;
    }
    parsed.host = std::string(authority.substr(0, colon));
    parsed.port = port;
  }
  if (parsed.host.empty()) return std::nullopt;
  return parsed;
}

ExportResult post_with_retries(std::size_t span_count, const RetryPolicy& policy,
                               const Sleeper& sleeper,
                               const std::function<HttpPostOutcome()>& attempt) {
  ExportResult result;
  if (span_count == 0) return result;
  auto delay = policy.initial_delay;
  for (int tries_left = policy.max_retries;; --tries_left) {
    const HttpPostOutcome outcome = attempt();
    if (outcome.transport_ok && outcome.status >= 200 && outcome.status < 300) {
      result.accepted = span_count;
      return result;
    }
    if (outcome.transport_ok && outcome.status >= 400 && outcome.status < 500 &&
        outcome.status != 429) {
      result.rejected = span_count;
      result.error = "endpoint rejected batch with status " + std::to_string(outcome.status);
      return result;
    }
    if (tries_left == 0) {
      result.retriable = true;
      result.error = outcome.transport_ok
                         ? "endpoint kept failing with status " + std::to_string(outcome.status)
                         : (outcome.error.empty() ? "transport failure" : outcome.error);
      return result;
    }
    sleeper(delay);
    delay = std::chrono::milliseconds(
        static_cast<std::int64_t>(std::llround(static_cast<double>(delay.count()) * policy.factor)));
  }
}

}  // namespace otelbridge::exporter
