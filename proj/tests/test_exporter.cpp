#include <doctest.h>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "opentelemetry/proto/collector/trace/v1/trace_service.pb.h"
#include "otelbridge/exporters.hpp"
#include "otelbridge/otlp.hpp"
#include "otelbridge/span.hpp"
#include "otelbridge/zipkin.hpp"
#include "support/http_loopback.hpp"
#include "support/oracles.hpp"

using namespace otelbridge;
using exporter::Span;
using exporter::SpanBatch;

namespace {

transform::Execution make_execution(std::int64_t trace_id, std::int32_t eoi, std::int32_t ess,
                                    std::int64_t tin, std::int64_t tout,
                                    const std::string& signature = "void a.B.c()",
                                    const std::string& hostname = "host-1",
                                    const std::string& session = "sess-1") {
  transform::Execution e;
  e.signature = *records::parse_signature(signature);
  e.hostname = hostname;
  e.session_id = session;
  e.trace_id = trace_id;
  e.tin_ns = tin;
  e.tout_ns = tout;
  e.eoi = eoi;
  e.ess = ess;
  return e;
}

reconstruct::ExecutionTrace make_trace(std::vector<transform::Execution> executions) {
  reconstruct::ExecutionTrace trace;
  trace.trace_id = executions.empty() ? 0 : executions[0].trace_id;
  trace.executions = std::move(executions);
  trace.complete = true;
  return trace;
}

std::int64_t be_bytes_to_i64(const std::uint8_t* bytes) {
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u = (u << 8) | bytes[i];
  return static_cast<std::int64_t>(u);
}

}  // namespace

TEST_CASE("derive_trace_id zero-extends the kieker id big-endian") {
  const auto id = exporter::derive_trace_id(1);
  CHECK(exporter::to_hex(id) == "00000000000000000000000000000001");

  std::mt19937_64 rng(555);
  for (int i = 0; i < 10'000; ++i) {
    const auto kieker = static_cast<std::int64_t>(rng() >> 1);  // non-negative
    const auto bytes = exporter::derive_trace_id(kieker);
    for (int b = 0; b < 8; ++b) CHECK(bytes[static_cast<std::size_t>(b)] == 0);
    CHECK(be_bytes_to_i64(bytes.data() + 8) == kieker);
  }
}

TEST_CASE("derive_span_id follows the rotate-xor formula with zero remapped") {
  // trace 0, eoi 0: rotl(0,32) ^ 1 = 1
  const auto zero_case = exporter::derive_span_id(0, 0);
  CHECK(exporter::to_hex(zero_case) == "0000000000000001");

  std::mt19937_64 rng(556);
  for (int i = 0; i < 10'000; ++i) {
    const auto trace_id = static_cast<std::int64_t>(rng() >> 1);
    const auto eoi = static_cast<std::int32_t>(rng() % 100'000);
    const auto bytes = exporter::derive_span_id(trace_id, eoi);

    const auto u = static_cast<std::uint64_t>(trace_id);
    std::uint64_t expected = ((u << 32) | (u >> 32)) ^
                             (static_cast<std::uint64_t>(static_cast<std::uint32_t>(eoi)) + 1);
    if (expected == 0) expected = 1;
    CHECK(static_cast<std::uint64_t>(be_bytes_to_i64(bytes.data())) == expected);
  }
}

TEST_CASE("span ids are distinct across eoi for a fixed trace") {
  std::set<std::string> seen;
  for (std::int32_t eoi = 0; eoi < 1000; ++eoi) {
    seen.insert(exporter::to_hex(exporter::derive_span_id(123456789, eoi)));
  }
  CHECK(seen.size() == 1000);
}

TEST_CASE("map_trace builds the documented span for a singleton execution") {
  const auto batch =
      make_trace({make_execution(42, 0, 0, 100, 200, "void a.B.c()", "node-7", "sess-3")});
  const auto spans = exporter::map_trace(batch);
  REQUIRE(spans.spans.size() == 1);
  const auto& span = spans.spans[0];
  CHECK(span.name == "B.c");
  CHECK(span.trace_id == exporter::derive_trace_id(42));
  CHECK(span.span_id == exporter::derive_span_id(42, 0));
  CHECK_FALSE(span.parent_span_id.has_value());
  CHECK(span.start_ns == 100);
  CHECK(span.end_ns == 200);
  CHECK(span.service_name == "node-7");

  using Attr = std::pair<std::string, std::string>;
  const std::vector<Attr> expected{{"code.namespace", "a.B"},
                                   {"code.function", "c"},
                                   {"session.id", "sess-3"},
                                   {"kieker.eoi", "0"},
                                   {"kieker.ess", "0"}};
  CHECK(span.attributes == expected);
}

TEST_CASE("map_trace omits session.id for the no-session sentinel and defaults the service") {
  const auto trace = make_trace({make_execution(1, 0, 0, 0, 10, "void a.B.c()", "",
                                                std::string(transform::kNoSessionId))});
  const auto batch = exporter::map_trace(trace);
  REQUIRE(batch.spans.size() == 1);
  CHECK(batch.spans[0].service_name == exporter::kUnknownServiceName);
  for (const auto& [key, value] : batch.spans[0].attributes) {
    CHECK(key != "session.id");
  }
}

TEST_CASE("map_trace wires parent edges exactly like parent_index") {
  std::mt19937_64 seeds(31007);
  for (int round = 0; round < 500; ++round) {
    oracles::TraceGenerator generator{seeds()};
    const auto generated = generator.generate(8, 80);

    reconstruct::ExecutionTrace trace;
    trace.trace_id = 1000 + round;
    trace.complete = true;
    for (const auto& node : generated.preorder) {
      trace.executions.push_back(
          make_execution(trace.trace_id, node.eoi, node.ess, node.tin, node.tout));
    }
    const auto batch = exporter::map_trace(trace);
    REQUIRE(batch.spans.size() == trace.executions.size());
    for (std::size_t i = 0; i < batch.spans.size(); ++i) {
      const auto parent = reconstruct::parent_index(trace, i);
      if (parent == reconstruct::kParentRoot) {
        CHECK_FALSE(batch.spans[i].parent_span_id.has_value());
        CHECK(generated.parents[i] == oracles::kOracleRoot);
      } else {
        REQUIRE(batch.spans[i].parent_span_id.has_value());
        CHECK(*batch.spans[i].parent_span_id == batch.spans[parent].span_id);
        CHECK(generated.parents[i] == parent);
      }
    }
  }
}

TEST_CASE("group_by_service keeps first-appearance order") {
  SpanBatch batch;
  for (const auto* service : {"alpha", "beta", "alpha", "gamma", "beta"}) {
    Span span;
    span.service_name = service;
    batch.spans.push_back(span);
  }
  const auto groups = batch.group_by_service();
  REQUIRE(groups.size() == 3);
  CHECK(groups[0].first == "alpha");
  CHECK(groups[0].second.size() == 2);
  CHECK(groups[1].first == "beta");
  CHECK(groups[1].second.size() == 2);
  CHECK(groups[2].first == "gamma");
  CHECK(groups[2].second.size() == 1);
  CHECK(groups[0].second[0] == &batch.spans[0]);
  CHECK(groups[0].second[1] == &batch.spans[2]);
}

TEST_CASE("stdout exporter writes one JSON line per span") {
  const auto trace = make_trace({make_execution(5, 0, 0, 100, 200),
                                 make_execution(5, 1, 1, 110, 190)});
  const auto batch = exporter::map_trace(trace);

  std::ostringstream out;
  exporter::StdoutExporter stdout_exporter(out);
  const auto result = stdout_exporter.export_batch(batch);
  CHECK(result.ok());
  CHECK(result.accepted == 2);

  std::istringstream lines(out.str());
  std::string line;
  std::size_t count = 0;
  while (std::getline(lines, line)) {
    const auto parsed = nlohmann::json::parse(line);
    CHECK(parsed.contains("traceId"));
    CHECK(parsed.contains("spanId"));
    CHECK(parsed.contains("name"));
    CHECK(parsed.contains("startNs"));
    CHECK(parsed.contains("endNs"));
    CHECK(parsed.contains("serviceName"));
    CHECK(line == exporter::span_json_line(batch.spans[count]));
    ++count;
  }
  CHECK(count == 2);
  // The child line carries the parent id, the root line does not.
  CHECK(nlohmann::json::parse(exporter::span_json_line(batch.spans[0])).contains("parentSpanId") ==
        false);
  CHECK(nlohmann::json::parse(exporter::span_json_line(batch.spans[1])).contains("parentSpanId"));
}

TEST_CASE("parse_url handles schemes, default ports and paths") {
  auto url = exporter::parse_url("http://localhost:4318/v1/traces");
  REQUIRE(url.has_value());
  CHECK(url->scheme == "http");
  CHECK(url->host == "localhost");
  CHECK(url->port == 4318);
  CHECK(url->path == "/v1/traces");

  url = exporter::parse_url("http://collector");
  REQUIRE(url.has_value());
  CHECK(url->port == 80);
  CHECK(url->path == "/");

  url = exporter::parse_url("https://collector/x/y");
  REQUIRE(url.has_value());
  CHECK(url->port == 443);
  CHECK(url->path == "/x/y");

  url = exporter::parse_url("http://127.0.0.1:9411/api/v2/spans");
  REQUIRE(url.has_value());
  CHECK(url->host == "127.0.0.1");
  CHECK(url->port == 9411);

  CHECK_FALSE(exporter::parse_url("ftp://x").has_value());
  CHECK_FALSE(exporter::parse_url("localhost:9411").has_value());
  CHECK_FALSE(exporter::parse_url("").has_value());
  CHECK_FALSE(exporter::parse_url("http://").has_value());
}

TEST_CASE("retry loop follows the backoff schedule and gives up as retriable") {
  using namespace std::chrono_literals;
  std::vector<std::chrono::milliseconds> sleeps;
  int attempts = 0;
  const auto result = exporter::post_with_retries(
      3, exporter::RetryPolicy{}, [&](std::chrono::milliseconds d) { sleeps.push_back(d); },
      [&]() -> exporter::HttpPostOutcome {
        ++attempts;
        return {false, 0, "connection refused"};
      });
  CHECK(attempts == 6);  // initial try plus five retries
  CHECK(sleeps == std::vector<std::chrono::milliseconds>{1000ms, 2000ms, 4000ms, 8000ms, 16000ms});
  CHECK(result.retriable);
  CHECK(result.accepted == 0);
  CHECK(result.rejected == 0);
  CHECK_FALSE(result.ok());
  CHECK_FALSE(result.error.empty());
}

TEST_CASE("4xx responses are permanent rejections, except 429") {
  int attempts = 0;
  auto result = exporter::post_with_retries(
      7, exporter::RetryPolicy{}, [](std::chrono::milliseconds) { FAIL("must not sleep"); },
      [&]() -> exporter::HttpPostOutcome {
        ++attempts;
        return {true, 400, ""};
      });
  CHECK(attempts == 1);
  CHECK(result.rejected == 7);
  CHECK(result.accepted == 0);
  CHECK_FALSE(result.retriable);
  CHECK_FALSE(result.ok());

  attempts = 0;
  int sleeps = 0;
  result = exporter::post_with_retries(
      7, exporter::RetryPolicy{}, [&](std::chrono::milliseconds) { ++sleeps; },
      [&]() -> exporter::HttpPostOutcome {
        ++attempts;
        return {true, 429, ""};
      });
  CHECK(attempts == 6);  // throttling is retriable
  CHECK(sleeps == 5);
  CHECK(result.retriable);
}

TEST_CASE("transient failures recover once the endpoint accepts") {
  using namespace std::chrono_literals;
  std::vector<std::chrono::milliseconds> sleeps;
  int attempts = 0;
  const auto result = exporter::post_with_retries(
      4, exporter::RetryPolicy{}, [&](std::chrono::milliseconds d) { sleeps.push_back(d); },
      [&]() -> exporter::HttpPostOutcome {
        ++attempts;
        if (attempts <= 2) return {true, 503, ""};
        return {true, 202, ""};
      });
  CHECK(attempts == 3);
  CHECK(sleeps == std::vector<std::chrono::milliseconds>{1000ms, 2000ms});
  CHECK(result.ok());
  CHECK(result.accepted == 4);
}

TEST_CASE("an empty batch sends nothing") {
  int attempts = 0;
  const auto result = exporter::post_with_retries(
      0, exporter::RetryPolicy{}, [](std::chrono::milliseconds) {},
      [&]() -> exporter::HttpPostOutcome {
        ++attempts;
        return {true, 200, ""};
      });
  CHECK(attempts == 0);
  CHECK(result.ok());
  CHECK(result.accepted == 0);
}

TEST_CASE("zipkin encoding matches the v2 schema") {
  auto trace = make_trace({make_execution(42, 0, 0, 1000, 3500, "void a.B.c()", "node-7"),
                           make_execution(42, 1, 1, 1500, 3000, "void a.B.d()", "node-7")});
  const auto batch = exporter::map_trace(trace);
  const auto encoded = exporter::encode_zipkin(batch);

  const auto parsed = nlohmann::json::parse(encoded);
  REQUIRE(parsed.is_array());
  REQUIRE(parsed.size() == 2);

  const auto& root = parsed[0];
  CHECK(root.at("traceId").get<std::string>() == "000000000000000000000000000000" + std::string("2a"));
  CHECK(root.at("traceId").get<std::string>().size() == 32);
  CHECK(root.at("id").get<std::string>().size() == 16);
  CHECK_FALSE(root.contains("parentId"));
  CHECK(root.at("name").get<std::string>() == "b.c");  // lowercased
  CHECK(root.at("timestamp").get<std::int64_t>() == 1);       // floor(1000ns / 1000)
  CHECK(root.at("duration").get<std::int64_t>() == 3);        // round(2500ns / 1000) = 3
  CHECK(root.at("localEndpoint").at("serviceName").get<std::string>() == "node-7");
  CHECK(root.at("tags").at("kieker.eoi").get<std::string>() == "0");

  const auto& child = parsed[1];
  REQUIRE(child.contains("parentId"));
  CHECK(child.at("parentId").get<std::string>() == root.at("id").get<std::string>());
  CHECK(child.at("duration").get<std::int64_t>() == 2);  // round(1500ns / 1000) = 2

  // Hex digits only, lowercase.
  for (const char c : root.at("traceId").get<std::string>()) {
    CHECK(((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f')));
  }
}

TEST_CASE("zipkin duration has a one microsecond floor") {
  const auto trace = make_trace({make_execution(1, 0, 0, 0, 100)});
  const auto parsed = nlohmann::json::parse(exporter::encode_zipkin(exporter::map_trace(trace)));
  CHECK(parsed[0].at("duration").get<std::int64_t>() == 1);
}

TEST_CASE("encoders are deterministic") {
  std::mt19937_64 seeds(4004);
  oracles::TraceGenerator generator{seeds()};
  const auto generated = generator.generate(6, 40);
  reconstruct::ExecutionTrace trace;
  trace.trace_id = 99;
  trace.complete = true;
  for (const auto& node : generated.preorder) {
    trace.executions.push_back(make_execution(99, node.eoi, node.ess, node.tin, node.tout));
  }
  const auto batch_a = exporter::map_trace(trace);
  const auto batch_b = exporter::map_trace(trace);
  CHECK(batch_a == batch_b);
  CHECK(exporter::encode_zipkin(batch_a) == exporter::encode_zipkin(batch_b));
  CHECK(exporter::encode_otlp(batch_a) == exporter::encode_otlp(batch_b));
}

TEST_CASE("otlp encoding groups by service and preserves ids byte for byte") {
  auto trace = make_trace({make_execution(7, 0, 0, 100, 400, "void a.B.c()", "svc-a"),
                           make_execution(7, 1, 1, 150, 250, "void a.B.d()", "svc-b"),
                           make_execution(7, 2, 1, 260, 390, "void a.B.e()", "svc-a")});
  const auto batch = exporter::map_trace(trace);
  const auto encoded = exporter::encode_otlp(batch);

  opentelemetry::proto::collector::trace::v1::ExportTraceServiceRequest request;
  REQUIRE(request.ParseFromString(encoded));
  REQUIRE(request.resource_spans_size() == 2);  // svc-a, svc-b

  std::size_t total_spans = 0;
  bool saw_root = false;
  for (const auto& resource_spans : request.resource_spans()) {
    std::string service;
    for (const auto& attr : resource_spans.resource().attributes()) {
      if (attr.key() == "service.name") service = attr.value().string_value();
    }
    CHECK((service == "svc-a" || service == "svc-b"));
    REQUIRE(resource_spans.scope_spans_size() == 1);
    const auto& scope_spans = resource_spans.scope_spans(0);
    CHECK(scope_spans.scope().name() == "otel-bridge");
    for (const auto& span : scope_spans.spans()) {
      ++total_spans;
      CHECK(span.trace_id().size() == 16);
      CHECK(span.span_id().size() == 8);
      CHECK(span.kind() ==
            opentelemetry::proto::trace::v1::Span::SPAN_KIND_INTERNAL);
      if (span.parent_span_id().empty()) {
        saw_root = true;
        CHECK(span.name() == "B.c");
        CHECK(span.start_time_unix_nano() == 100);
        CHECK(span.end_time_unix_nano() == 400);
        const auto expected_trace = exporter::derive_trace_id(7);
        CHECK(std::equal(expected_trace.begin(), expected_trace.end(),
                         reinterpret_cast<const std::uint8_t*>(span.trace_id().data())));
        const auto expected_span = exporter::derive_span_id(7, 0);
        CHECK(std::equal(expected_span.begin(), expected_span.end(),
                         reinterpret_cast<const std::uint8_t*>(span.span_id().data())));
      }
    }
  }
  CHECK(total_spans == 3);
  CHECK(saw_root);
}

TEST_CASE("otlp exporter round-trips through a live collector") {
  loopback::HttpCollector collector("/v1/traces");

  exporter::OtlpExporterConfig config;
  config.endpoint = collector.url("/v1/traces");
  config.sleeper = [](std::chrono::milliseconds) {};
  exporter::OtlpHttpExporter otlp_exporter(config);

  const auto trace = make_trace({make_execution(11, 0, 0, 100, 300),
                                 make_execution(11, 1, 1, 120, 280)});
  const auto batch = exporter::map_trace(trace);
  const auto result = otlp_exporter.export_batch(batch);
  REQUIRE(result.ok());
  CHECK(result.accepted == 2);

  const auto requests = collector.requests();
  REQUIRE(requests.size() == 1);
  CHECK(requests[0].first == "application/x-protobuf");
  opentelemetry::proto::collector::trace::v1::ExportTraceServiceRequest request;
  REQUIRE(request.ParseFromString(requests[0].second));
  std::size_t received = 0;
  for (const auto& rs : request.resource_spans()) {
    for (const auto& ss : rs.scope_spans()) {
      received += static_cast<std::size_t>(ss.spans_size());
    }
  }
  CHECK(received == 2);
}

TEST_CASE("zipkin exporter posts valid JSON to a live collector") {
  loopback::HttpCollector collector("/api/v2/spans", 202);

  exporter::ZipkinExporterConfig config;
  config.endpoint = collector.url("/api/v2/spans");
  config.sleeper = [](std::chrono::milliseconds) {};
  exporter::ZipkinExporter zipkin_exporter(config);

  const auto trace = make_trace({make_execution(12, 0, 0, 100, 300)});
  const auto result = zipkin_exporter.export_batch(exporter::map_trace(trace));
  REQUIRE(result.ok());
  CHECK(result.accepted == 1);

  const auto requests = collector.requests();
  REQUIRE(requests.size() == 1);
  CHECK(requests[0].first == "application/json");
  const auto parsed = nlohmann::json::parse(requests[0].second);
  REQUIRE(parsed.is_array());
  CHECK(parsed.size() == 1);
}

TEST_CASE("a rejecting collector fails the batch without retries") {
  loopback::HttpCollector collector("/v1/traces", 400);

  exporter::OtlpExporterConfig config;
  config.endpoint = collector.url("/v1/traces");
  config.sleeper = [](std::chrono::milliseconds) { FAIL("must not sleep on 4xx"); };
  exporter::OtlpHttpExporter otlp_exporter(config);

  const auto trace = make_trace({make_execution(13, 0, 0, 1, 2)});
  const auto result = otlp_exporter.export_batch(exporter::map_trace(trace));
  CHECK_FALSE(result.ok());
  CHECK(result.rejected == 1);
  CHECK(collector.requests().size() == 1);
}

TEST_CASE("exporters reject malformed endpoint URLs at construction") {
  exporter::ZipkinExporterConfig zipkin_config;
  zipkin_config.endpoint = "not a url";
  CHECK_THROWS_AS(exporter::ZipkinExporter{zipkin_config}, std::invalid_argument);

  exporter::OtlpExporterConfig otlp_config;
  otlp_config.endpoint = "gopher://x";
  CHECK_THROWS_AS(exporter::OtlpHttpExporter{otlp_config}, std::invalid_argument);
}
