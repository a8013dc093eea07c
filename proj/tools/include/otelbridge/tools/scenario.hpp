#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "otelbridge/records.hpp"

namespace otelbridge::tools {

/// Synthetic workload shape: a web-shop of cooperating services, each call
/// tree rooted at one service and fanning out across the others.
struct ScenarioConfig {
  std::size_t services = 5;  // capped at the built-in catalog size
  std::size_t traces = 10;
  int max_depth = 3;     // stack levels; the root is level 1
  int max_children = 3;  // per non-leaf call
  std::uint64_t seed = 42;
  std::int64_t first_trace_id = 1;
  std::int64_t start_time_ns = 1'700'000'000'000'000'000;
  std::int64_t trace_gap_ns = 1'000'000;

  bool valid() const {
    return services > 0 && traces > 0 && max_depth > 0 && max_children >= 0 &&
           first_trace_id >= 0;
  }
};

std::size_t scenario_catalog_size();
std::string scenario_service_name(std::size_t index);

/// Deterministic record stream: same config, same records, byte for byte
/// after encoding. Records appear in completion order (tout ascending within
/// a trace), the order a monitoring writer would emit them in.
std::vector<records::OperationExecutionRecord> generate_scenario(const ScenarioConfig& config);

/// Single-socket encoding of a whole scenario, one shared string registry.
std::vector<std::uint8_t> encode_scenario(
    const std::vector<records::OperationExecutionRecord>& oers);

struct EmitReport {
  std::size_t traces = 0;
  std::size_t records = 0;
  std::size_t bytes = 0;
};

/// Generates, encodes and ships a scenario over one TCP connection.
EmitReport emit_synthetic(const ScenarioConfig& config, const std::string& host,
                          std::uint16_t port);

}  // namespace otelbridge::tools
