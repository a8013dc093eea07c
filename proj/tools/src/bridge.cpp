#include "otelbridge/tools/bridge.hpp"

#include <chrono>
#include <thread>
#include <variant>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "otelbridge/otlp.hpp"
#include "otelbridge/reconstruct.hpp"
#include "otelbridge/tcp_server.hpp"
#include "otelbridge/transform.hpp"
#include "otelbridge/zipkin.hpp"

namespace otelbridge::tools {

namespace {

std::int64_t steady_now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

/// How often idle stages look for timed-out traces.
constexpr std::int64_t kEvictPollNs = 50'000'000;

/// Record stream -> Execution stream. Holds the event-trace state for its
/// shard; evicts stale event traces on the trace timeout.
class TransformShard : public pipeline::Stage {
 public:
  TransformShard(std::string name, BridgeCounters& counters, std::int64_t timeout_ns)
      : Stage(std::move(name)),
        counters_(counters),
        timeout_ns_(timeout_ns),
        in_(make_input<records::MonitoringRecord>("in")),
        out_(make_output<transform::Execution>("out")) {}

  InputPort<records::MonitoringRecord>& input() { return in_; }
  OutputPort<transform::Execution>& output() { return out_; }

  pipeline::StepStatus step(pipeline::StepMode mode) override {
    auto value = in_.pop(mode);
    const std::int64_t now = steady_now_ns();
    if (!value) {
      maybe_evict(now);
      return in_.drained() ? pipeline::StepStatus::kDone : pipeline::StepStatus::kIdle;
    }
    if (const auto* oer = std::get_if<records::OperationExecutionRecord>(&*value)) {
      if (auto execution = transform::from_oer(*oer)) {
        counters_.executions.fetch_add(1);
        out_.push(std::move(*execution));
      } else {
        count_dropped();
      }
    } else {
      auto result = assembler_.consume_event(*value, now);
      for (auto& execution : result.executions) {
        counters_.executions.fetch_add(1);
        out_.push(std::move(execution));
      }
      if (result.outcome != transform::EventOutcome::kOk) count_dropped();
    }
    maybe_evict(now);
    return pipeline::StepStatus::kProgress;
  }

  void on_stop() override { count_evictions(assembler_.drain()); }

 private:
  void maybe_evict(std::int64_t now) {
    if (now - last_evict_ns_ < kEvictPollNs) return;
    last_evict_ns_ = now;
    count_evictions(assembler_.evict_stale(now, timeout_ns_));
  }

  void count_evictions(const std::vector<transform::EventTraceAssembler::EvictedTrace>& evicted) {
    for (const auto& trace : evicted) {
      // Open frames are call data that never made it downstream; a broken
      // trace without them already surfaced via its partial executions.
      if (trace.open_frames > 0) counters_.traces_dropped.fetch_add(1);
    }
  }

  BridgeCounters& counters_;
  const std::int64_t timeout_ns_;
  transform::EventTraceAssembler assembler_;
  std::int64_t last_evict_ns_ = 0;
  InputPort<records::MonitoringRecord>& in_;
  OutputPort<transform::Execution>& out_;
};

/// Execution stream -> complete ExecutionTraces; drops what times out.
class ReconstructShard : public pipeline::Stage {
 public:
  ReconstructShard(std::string name, BridgeCounters& counters, std::int64_t timeout_ns,
                   reconstruct::ReconstructorConfig config)
      : Stage(std::move(name)),
        counters_(counters),
        timeout_ns_(timeout_ns),
        reconstructor_(config),
        in_(make_input<transform::Execution>("in")),
        out_(make_output<reconstruct::ExecutionTrace>("out")) {}

  InputPort<transform::Execution>& input() { return in_; }
  OutputPort<reconstruct::ExecutionTrace>& output() { return out_; }

  pipeline::StepStatus step(pipeline::StepMode mode) override {
    auto value = in_.pop(mode);
    const std::int64_t now = steady_now_ns();
    if (!value) {
      maybe_evict(now);
      return in_.drained() ? pipeline::StepStatus::kDone : pipeline::StepStatus::kIdle;
    }
    auto result = reconstructor_.add_execution(std::move(*value), now);
    for (auto& trace : result.completed) {
      counters_.traces_complete.fetch_add(1);
      out_.push(std::move(trace));
    }
    counters_.traces_dropped.fetch_add(result.evicted.size());
    maybe_evict(now);
    return pipeline::StepStatus::kProgress;
  }

  void on_stop() override {
    counters_.traces_dropped.fetch_add(reconstructor_.drain().size());
  }

 private:
  void maybe_evict(std::int64_t now) {
    if (now - last_evict_ns_ < kEvictPollNs) return;
    last_evict_ns_ = now;
    counters_.traces_dropped.fetch_add(reconstructor_.evict_expired(now, timeout_ns_).size());
  }

  BridgeCounters& counters_;
  const std::int64_t timeout_ns_;
  reconstruct::Reconstructor reconstructor_;
  std::int64_t last_evict_ns_ = 0;
  InputPort<transform::Execution>& in_;
  OutputPort<reconstruct::ExecutionTrace>& out_;
};

/// Terminal stage: maps each trace to spans and sends them synchronously,
/// so the bounded input queue doubles as the exporter outbox.
class ExportSink : public pipeline::Stage {
 public:
  ExportSink(std::string name, BridgeCounters& counters, exporter::SpanExporter& span_exporter)
      : Stage(std::move(name)),
        counters_(counters),
        exporter_(span_exporter),
        in_(make_input<reconstruct::ExecutionTrace>("in")) {}

  InputPort<reconstruct::ExecutionTrace>& input() { return in_; }

  pipeline::StepStatus step(pipeline::StepMode mode) override {
    auto trace = in_.pop(mode);
    if (!trace) {
      return in_.drained() ? pipeline::StepStatus::kDone : pipeline::StepStatus::kIdle;
    }
    const exporter::SpanBatch batch = exporter::map_trace(*trace);
    const exporter::ExportResult result = exporter_.export_batch(batch);
    counters_.spans_exported.fetch_add(result.accepted);
    if (!result.ok()) {
      counters_.export_failures.fetch_add(1);
      spdlog::warn("export of trace {} failed: {}", trace->trace_id, result.error);
    }
    return pipeline::StepStatus::kProgress;
  }

 private:
  BridgeCounters& counters_;
  exporter::SpanExporter& exporter_;
  InputPort<reconstruct::ExecutionTrace>& in_;
};

}  // namespace

std::optional<std::string> BridgeConfig::validate() const {
  if (exporter != "otlp" && exporter != "zipkin" && exporter != "stdout") {
    return "unknown exporter '" + exporter + "' (expected otlp, zipkin or stdout)";
  }
  if (exporter == "otlp" && !exporter::parse_url(otlp_endpoint).has_value()) {
    return "unparseable --otlp-endpoint '" + otlp_endpoint + "'";
  }
  if (exporter == "zipkin" && !exporter::parse_url(zipkin_endpoint).has_value()) {
    return "unparseable --zipkin-endpoint '" + zipkin_endpoint + "'";
  }
  if (trace_timeout_ms <= 0) return "--trace-timeout-ms must be positive";
  if (max_buffered_traces == 0) return "--max-buffered-traces must be positive";
  if (max_trace_size == 0) return "max_trace_size must be positive";
  if (shards <= 0) return "--shards must be positive";
  if (queue_capacity == 0) return "queue_capacity must be positive";
  if (read_buffer_bytes < 256) return "read_buffer_bytes must be at least 256";
  return std::nullopt;
}

std::string render_stats(const BridgeCounters& counters) {
  std::string body;
  const auto line = [&body](const char* key, const std::atomic<std::uint64_t>& value) {
    body += key;
    body += "=";
    body += std::to_string(value.load());
    body += "\n";
  };
  line("records_in", counters.records_in);
  line("executions", counters.executions);
  line("traces_complete", counters.traces_complete);
  line("traces_dropped", counters.traces_dropped);
  line("spans_exported", counters.spans_exported);
  line("export_failures", counters.export_failures);
  return body;
}

struct TransformerDaemon::Impl {
  explicit Impl(BridgeConfig cfg) : config(std::move(cfg)), ingress(config.queue_capacity) {}

  BridgeConfig config;
  BridgeCounters counters;
  pipeline::BoundedQueue<records::MonitoringRecord> ingress;
  pipeline::Pipeline pipe;
  std::unique_ptr<exporter::SpanExporter> span_exporter;
  std::unique_ptr<wire::TcpIngestServer> server;

  httplib::Server stats;
  std::thread stats_thread;
  int actual_stats_port = 0;

  std::thread pipeline_thread;
  pipeline::TerminationReport term_report;

  std::atomic<bool> started{false};
  std::atomic<bool> stop_requested{false};
  std::atomic<bool> drained{false};
  bool waited = false;

  void build_pipeline();
  void start_stats_server();
};

TransformerDaemon::TransformerDaemon(BridgeConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}

TransformerDaemon::~TransformerDaemon() {
  request_stop();
  if (impl_->started.load()) wait();
}

void TransformerDaemon::Impl::build_pipeline() {
  const std::int64_t timeout_ns = config.trace_timeout_ms * 1'000'000;
  const reconstruct::ReconstructorConfig reconstructor_config{config.max_buffered_traces,
                                                              config.max_trace_size};

  auto& source = pipe.add_stage<pipeline::FunctionSource<records::MonitoringRecord>>(
      "tcp-source", [this](const auto& emit) {
        auto value = ingress.pop_wait_for(pipeline::kBlockingPollInterval);
        if (!value) return !ingress.drained();
        counters.records_in.fetch_add(1);
        emit(std::move(*value));
        return true;
      });

  auto& sink = pipe.add_stage<ExportSink>("export", counters, *span_exporter);

  const auto shard_count = static_cast<std::size_t>(config.shards);
  if (shard_count == 1) {
    auto& transform_stage = pipe.add_stage<TransformShard>("transform", counters, timeout_ns);
    auto& reconstruct_stage =
        pipe.add_stage<ReconstructShard>("reconstruct", counters, timeout_ns,
                                         reconstructor_config);
    pipe.connect(source.output(), transform_stage.input(), config.queue_capacity);
    pipe.connect(transform_stage.output(), reconstruct_stage.input(), config.queue_capacity);
    pipe.connect(reconstruct_stage.output(), sink.input(), config.queue_capacity);
    return;
  }

  auto& router = pipe.add_stage<pipeline::RouterStage<records::MonitoringRecord>>(
      "router", shard_count, [](const records::MonitoringRecord& record) {
        const std::int64_t trace_id = records::trace_id_of(record);
        return static_cast<std::size_t>(trace_id < 0 ? 0 : trace_id);
      });
  auto& merge =
      pipe.add_stage<pipeline::MergeStage<reconstruct::ExecutionTrace>>("merge", shard_count);
  pipe.connect(source.output(), router.input(), config.queue_capacity);
  for (std::size_t shard = 0; shard < shard_count; ++shard) {
    auto& transform_stage = pipe.add_stage<TransformShard>(
        "transform-" + std::to_string(shard), counters, timeout_ns);
    auto& reconstruct_stage =
        pipe.add_stage<ReconstructShard>("reconstruct-" + std::to_string(shard), counters,
                                         timeout_ns, reconstructor_config);
    pipe.connect(router.output(shard), transform_stage.input(), config.queue_capacity);
    pipe.connect(transform_stage.output(), reconstruct_stage.input(), config.queue_capacity);
    pipe.connect(reconstruct_stage.output(), merge.input(shard), config.queue_capacity);
  }
  pipe.connect(merge.output(), sink.input(), config.queue_capacity);
}

void TransformerDaemon::Impl::start_stats_server() {
  stats.Get("/stats", [this](const httplib::Request&, httplib::Response& response) {
    response.set_content(render_stats(counters), "text/plain");
  });
  if (config.stats_port == 0) {
    actual_stats_port = stats.bind_to_any_port(config.bind_address);
    if (actual_stats_port <= 0) throw wire::BindError("failed to bind stats port");
  } else {
    if (!stats.bind_to_port(config.bind_address, config.stats_port)) {
      throw wire::BindError("failed to bind stats port " + std::to_string(config.stats_port));
    }
    actual_stats_port = config.stats_port;
  }
  stats_thread = std::thread([this] { stats.listen_after_bind(); });
  for (int i = 0; i < 100 && !stats.is_running(); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
}

void TransformerDaemon::start() {
  Impl& impl = *impl_;
  if (const auto error = impl.config.validate()) {
    throw std::invalid_argument(*error);
  }
  spdlog::set_level(spdlog::level::from_str(impl.config.log_level));

  switch (impl.config.exporter[0]) {
    case 's':
      impl.span_exporter = impl.config.stdout_sink
                               ? std::make_unique<exporter::StdoutExporter>(*impl.config.stdout_sink)
                               : std::make_unique<exporter::StdoutExporter>();
      break;
    case 'z': {
      exporter::ZipkinExporterConfig zipkin_config;
      zipkin_config.endpoint = impl.config.zipkin_endpoint;
      zipkin_config.sleeper = impl.config.export_sleeper;
      impl.span_exporter = std::make_unique<exporter::ZipkinExporter>(std::move(zipkin_config));
      break;
    }
    default: {
      exporter::OtlpExporterConfig otlp_config;
      otlp_config.endpoint = impl.config.otlp_endpoint;
      otlp_config.sleeper = impl.config.export_sleeper;
      impl.span_exporter = std::make_unique<exporter::OtlpHttpExporter>(std::move(otlp_config));
      break;
    }
  }

  impl.build_pipeline();

  wire::ServerConfig server_config;
  server_config.bind_address = impl.config.bind_address;
  server_config.port = impl.config.listen_port;
  server_config.read_buffer_bytes = impl.config.read_buffer_bytes;
  impl.server = std::make_unique<wire::TcpIngestServer>(
      server_config,
      [this](records::MonitoringRecord&& record) { return impl_->ingress.push(std::move(record)); });
  impl.server->start();

  if (impl.config.enable_stats_server) impl.start_stats_server();

  impl.pipeline_thread = std::thread([this] {
    impl_->term_report = impl_->pipe.run_threaded();
    impl_->drained.store(true);
  });
  impl.started.store(true);

  spdlog::info("otel-bridge listening on {}:{} ({} exporter, {} shard{})",
               impl.config.bind_address, impl.server->port(), impl.config.exporter,
               impl.config.shards, impl.config.shards == 1 ? "" : "s");
  if (impl.config.enable_stats_server) {
    spdlog::info("stats endpoint at http://{}:{}/stats", impl.config.bind_address,
                 impl.actual_stats_port);
  }
}

void TransformerDaemon::request_stop() {
  Impl& impl = *impl_;
  if (impl.stop_requested.exchange(true)) return;
  if (impl.server) impl.server->stop();
  impl.ingress.close();
}

int TransformerDaemon::wait() {
  Impl& impl = *impl_;
  if (!impl.started.load()) return 2;
  if (!impl.waited) {
    if (impl.pipeline_thread.joinable()) impl.pipeline_thread.join();
    impl.stats.stop();
    if (impl.stats_thread.joinable()) impl.stats_thread.join();
    if (impl.server) impl.server->stop();
    impl.waited = true;
    spdlog::info("drained: {} records in, {} spans exported, {} traces dropped",
                 impl.counters.records_in.load(), impl.counters.spans_exported.load(),
                 impl.counters.traces_dropped.load());
    for (const auto& failure : impl.term_report.failures) {
      spdlog::error("stage {} failed: {}", failure.stage, failure.message);
    }
  }
  return impl.term_report.ok() ? 0 : 1;
}

bool TransformerDaemon::finished() const { return impl_->drained.load(); }

std::uint16_t TransformerDaemon::listen_port() const {
  return impl_->server ? impl_->server->port() : impl_->config.listen_port;
}

std::uint16_t TransformerDaemon::stats_port() const {
  return static_cast<std::uint16_t>(impl_->actual_stats_port);
}

const BridgeCounters& TransformerDaemon::counters() const { return impl_->counters; }

const pipeline::TerminationReport& TransformerDaemon::report() const {
  return impl_->term_report;
}

}  // namespace otelbridge::tools
