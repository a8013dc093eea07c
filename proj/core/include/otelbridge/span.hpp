#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "otelbridge/reconstruct.hpp"

namespace otelbridge::exporter {

inline constexpr const char* kUnknownServiceName = "unknown_service";

using TraceIdBytes = std::array<std::uint8_t, 16>;
using SpanIdBytes = std::array<std::uint8_t, 8>;

/// Backend-neutral span. Attributes keep insertion order so every backend
/// serializes them identically.
struct Span {
  TraceIdBytes trace_id{};
  SpanIdBytes span_id{};
  std::optional<SpanIdBytes> parent_span_id;
  std::string name;
  std::int64_t start_ns = 0;
  std::int64_t end_ns = 0;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::string service_name;

  bool operator==(const Span&) const = default;
};

/// Spans in ascending eoi order, so a parent always precedes its children.
struct SpanBatch {
  std::vector<Span> spans;

  bool operator==(const SpanBatch&) const = default;

  /// Service groups in first-appearance order; pointers into spans.
  std::vector<std::pair<std::string, std::vector<const Span*>>> group_by_service() const;
};

/// 128-bit trace id: high 8 bytes zero, low 8 bytes big-endian kieker id.
TraceIdBytes derive_trace_id(std::int64_t kieker_trace_id);

/// rotl(traceId, 32) XOR (eoi + 1), with 0 remapped to 1; big-endian bytes.
/// Injective in eoi for a fixed trace id.
SpanIdBytes derive_span_id(std::int64_t kieker_trace_id, std::int32_t eoi);

/// One span per execution, parents wired via reconstruct::parent_index.
SpanBatch map_trace(const reconstruct::ExecutionTrace& trace);

std::string to_hex(const std::uint8_t* bytes, std::size_t size);

template <std::size_t N>
std::string to_hex(const std::array<std::uint8_t, N>& bytes) {
  return to_hex(bytes.data(), bytes.size());
}

}  // namespace otelbridge::exporter
