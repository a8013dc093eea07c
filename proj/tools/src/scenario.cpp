#include "otelbridge/tools/scenario.hpp"

#include <array>
#include <random>

#include "otelbridge/codec.hpp"
#include "otelbridge/tools/tcp_client.hpp"

namespace otelbridge::tools {

namespace {

struct ServiceSpec {
  const char* host;
  std::array<const char*, 2> signatures;
};

constexpr std::array<ServiceSpec, 5> kCatalog{{
    {"frontend",
     {"public void org.webshop.frontend.StorefrontServlet.handleRequest(HttpRequest, HttpResponse)",
      "private java.lang.String org.webshop.frontend.PageRenderer.render(Model)"}},
    {"auth",
     {"public boolean org.webshop.auth.AuthService.validateSession(java.lang.String)",
      "public Token org.webshop.auth.TokenIssuer.issue(User)"}},
    {"catalog",
     {"public java.util.List org.webshop.catalog.ProductRepository.findByCategory(long)",
      "public Product org.webshop.catalog.ProductRepository.findById(long)"}},
    {"recommender",
     {"public java.util.List org.webshop.recommender.RecommenderEngine.recommend(long, int)",
      "private double org.webshop.recommender.Scorer.score(long)"}},
    {"images",
     {"public byte[] org.webshop.images.ImageProvider.fetchImage(java.lang.String, int)",
      "private byte[] org.webshop.images.ImageCache.lookup(java.lang.String)"}},
}};

class TraceBuilder {
 public:
  TraceBuilder(const ScenarioConfig& config, std::mt19937_64& rng,
               std::vector<records::OperationExecutionRecord>& out)
      : config_(config),
        services_(std::min(config.services, kCatalog.size())),
        rng_(rng),
        out_(out) {}

  void build(std::size_t trace_index) {
    trace_id_ = config_.first_trace_id + static_cast<std::int64_t>(trace_index);
    session_ = "sess-" + std::to_string(trace_index % 8);
    cursor_ = config_.start_time_ns + static_cast<std::int64_t>(trace_index) * config_.trace_gap_ns;
    next_eoi_ = 0;
    call(trace_index % services_, 1);
  }

 private:
  std::int64_t uniform(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng_);
  }

  void call(std::size_t service, int level) {
    const std::int32_t eoi = next_eoi_++;
    const ServiceSpec& spec = kCatalog[service];
    const char* signature =
        spec.signatures[static_cast<std::size_t>(uniform(0, spec.signatures.size() - 1))];
    const std::int64_t tin = cursor_;
    cursor_ += uniform(20'000, 80'000);
    const std::int64_t children = level < config_.max_depth ? uniform(0, config_.max_children) : 0;
    for (std::int64_t c = 0; c < children; ++c) {
      call(static_cast<std::size_t>(uniform(0, static_cast<std::int64_t>(services_) - 1)),
           level + 1);
      cursor_ += uniform(5'000, 20'000);
    }
    cursor_ += uniform(10'000, 40'000);
    const std::int64_t tout = cursor_;

    records::OperationExecutionRecord record;
    record.logging_timestamp_ns = tout;  // a probe logs when the call returns
    record.operation_signature = signature;
    record.session_id = session_;
    record.trace_id = trace_id_;
    record.tin_ns = tin;
    record.tout_ns = tout;
    record.hostname = spec.host;
    record.eoi = eoi;
    record.ess = level - 1;
    out_.push_back(std::move(record));
  }

  const ScenarioConfig& config_;
  std::size_t services_;
  std::mt19937_64& rng_;
  std::vector<records::OperationExecutionRecord>& out_;
  std::int64_t trace_id_ = 0;
  std::string session_;
  std::int64_t cursor_ = 0;
  std::int32_t next_eoi_ = 0;
};

}  // namespace

std::size_t scenario_catalog_size() { return kCatalog.size(); }

std::string scenario_service_name(std::size_t index) { return kCatalog.at(index).host; }

std::vector<records::OperationExecutionRecord> generate_scenario(const ScenarioConfig& config) {
  std::vector<records::OperationExecutionRecord> generated;
  std::mt19937_64 rng(config.seed);
  TraceBuilder builder(config, rng, generated);
  for (std::size_t i = 0; i < config.traces; ++i) builder.build(i);
  return generated;
}

std::vector<std::uint8_t> encode_scenario(
    const std::vector<records::OperationExecutionRecord>& oers) {
  std::vector<std::uint8_t> bytes;
  wire::EncodeRegistry registry;
  for (const auto& record : oers) {
    wire::encode_frame(records::MonitoringRecord(record), registry, bytes);
  }
  return bytes;
}

EmitReport emit_synthetic(const ScenarioConfig& config, const std::string& host,
                          std::uint16_t port) {
  const auto generated = generate_scenario(config);
  const auto bytes = encode_scenario(generated);
  TcpClient client(host, port);
  client.send_all(bytes.data(), bytes.size());
  client.close();
  EmitReport report;
  report.traces = config.traces;
  report.records = generated.size();
  report.bytes = bytes.size();
  return report;
}

}  // namespace otelbridge::tools
