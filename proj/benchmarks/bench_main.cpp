#include <benchmark/benchmark.h>

#include <optional>
#include <span>
#include <vector>

#include "otelbridge/codec.hpp"
#include "otelbridge/reconstruct.hpp"
#include "otelbridge/span.hpp"
#include "otelbridge/tools/scenario.hpp"
#include "otelbridge/transform.hpp"
#include "otelbridge/zipkin.hpp"

using namespace otelbridge;

namespace {

records::OperationExecutionRecord sample_record() {
  records::OperationExecutionRecord record;
  record.logging_timestamp_ns = 1'700'000'000'000'000'000;
  record.operation_signature =
      "public java.util.List org.webshop.catalog.ProductRepository.findByCategory(long)";
  record.session_id = "sess-3";
  record.trace_id = 12345;
  record.tin_ns = 1'700'000'000'000'000'000;
  record.tout_ns = 1'700'000'000'000'050'000;
  record.hostname = "catalog";
  record.eoi = 3;
  record.ess = 1;
  return record;
}

/// One mid-sized complete trace reused by the reconstruction-side benchmarks.
std::vector<transform::Execution> sample_trace_executions() {
  tools::ScenarioConfig config;
  config.traces = 1;
  config.max_depth = 5;
  config.max_children = 3;
  config.seed = 11;
  std::vector<transform::Execution> executions;
  for (const auto& record : tools::generate_scenario(config)) {
    executions.push_back(*transform::from_oer(record));
  }
  return executions;
}

void BM_EncodeFrame(benchmark::State& state) {
  const records::MonitoringRecord record = sample_record();
  wire::EncodeRegistry registry;
  std::vector<std::uint8_t> out;
  wire::encode_frame(record, registry, out);  // warm the registry
  for (auto _ : state) {
    out.clear();
    wire::encode_frame(record, registry, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_EncodeFrame);

void BM_DecodeFrame(benchmark::State& state) {
  wire::EncodeRegistry encode_registry;
  std::vector<std::uint8_t> warmup;
  wire::encode_frame(records::MonitoringRecord(sample_record()), encode_registry, warmup);

  // Split registry entries from the record frame so the loop measures only
  // the record path against a warm registry.
  records::StringRegistry registry;
  std::span<const std::uint8_t> rest(warmup);
  while (true) {
    const auto result = wire::decode_frame(rest, registry);
    if (result.record.has_value()) break;
    rest = rest.subspan(result.consumed);
  }
  for (auto _ : state) {
    auto result = wire::decode_frame(rest, registry);
    benchmark::DoNotOptimize(result.record);
  }
  state.SetItemsProcessed(state.iterations());
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(rest.size()));
}
BENCHMARK(BM_DecodeFrame);

void BM_ParseSignature(benchmark::State& state) {
  const std::string signature =
      "public static final java.util.List org.webshop.catalog.ProductRepository.findByCategory("
      "long, java.lang.String)";
  for (auto _ : state) {
    auto parsed = records::parse_signature(signature);
    benchmark::DoNotOptimize(parsed);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ParseSignature);

void BM_ReconstructTrace(benchmark::State& state) {
  const auto executions = sample_trace_executions();
  for (auto _ : state) {
    reconstruct::Reconstructor reconstructor;
    std::size_t completed = 0;
    for (const auto& execution : executions) {
      completed += reconstructor.add_execution(execution, 0).completed.size();
    }
    benchmark::DoNotOptimize(completed);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(executions.size()));
}
BENCHMARK(BM_ReconstructTrace);

void BM_MapTrace(benchmark::State& state) {
  const auto executions = sample_trace_executions();
  reconstruct::Reconstructor reconstructor;
  std::optional<reconstruct::ExecutionTrace> trace;
  for (const auto& execution : executions) {
    auto result = reconstructor.add_execution(execution, 0);
    if (!result.completed.empty()) trace = std::move(result.completed.front());
  }
  for (auto _ : state) {
    auto batch = exporter::map_trace(*trace);
    benchmark::DoNotOptimize(batch.spans.data());
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(trace->executions.size()));
}
BENCHMARK(BM_MapTrace);

void BM_ZipkinEncode(benchmark::State& state) {
  const auto executions = sample_trace_executions();
  reconstruct::Reconstructor reconstructor;
  std::optional<reconstruct::ExecutionTrace> trace;
  for (const auto& execution : executions) {
    auto result = reconstructor.add_execution(execution, 0);
    if (!result.completed.empty()) trace = std::move(result.completed.front());
  }
  const auto batch = exporter::map_trace(*trace);
  for (auto _ : state) {
    auto encoded = exporter::encode_zipkin(batch);
    benchmark::DoNotOptimize(encoded.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.spans.size()));
}
BENCHMARK(BM_ZipkinEncode);

}  // namespace

BENCHMARK_MAIN();
