#pragma once

#include <cstdint>
#include <string>
#include <variant>

namespace otelbridge::records {

/// Wire class ids of the supported record kinds.
enum class RecordKind : std::int32_t {
  kOperationExecution = 1,
  kBeforeOperationEvent = 2,
  kAfterOperationEvent = 3,
  kTraceMetadata = 4,
};

const char* to_string(RecordKind kind);

/// One finished operation invocation, state-based flavor: entry/exit
/// timestamps plus the precomputed order index (eoi) and stack depth (ess).
struct OperationExecutionRecord {
  std::int64_t logging_timestamp_ns = 0;
  std::string operation_signature;
  std::string session_id;
  std::int64_t trace_id = 0;
  std::int64_t tin_ns = 0;
  std::int64_t tout_ns = 0;
  std::string hostname;
  std::int32_t eoi = 0;
  std::int32_t ess = 0;

  bool operator==(const OperationExecutionRecord&) const = default;
};

/// Control-flow event marking the start of an operation.
struct BeforeOperationEvent {
  std::int64_t logging_timestamp_ns = 0;
  std::int64_t timestamp_ns = 0;
  std::int64_t trace_id = 0;
  std::int32_t order_index = 0;
  std::string operation_signature;
  std::string class_signature;

  bool operator==(const BeforeOperationEvent&) const = default;
};

/// Control-flow event marking the end of an operation.
struct AfterOperationEvent {
  std::int64_t logging_timestamp_ns = 0;
  std::int64_t timestamp_ns = 0;
  std::int64_t trace_id = 0;
  std::int32_t order_index = 0;
  std::string operation_signature;
  std::string class_signature;

  bool operator==(const AfterOperationEvent&) const = default;
};

/// Session/host metadata for one trace. parent_trace_id/parent_order_id are
/// -1 when the trace has no parent.
struct TraceMetadataRecord {
  std::int64_t logging_timestamp_ns = 0;
  std::int64_t trace_id = 0;
  std::int64_t thread_id = 0;
  std::string session_id;
  std::string hostname;
  std::int64_t parent_trace_id = -1;
  std::int32_t parent_order_id = -1;

  bool operator==(const TraceMetadataRecord&) const = default;
};

using MonitoringRecord = std::variant<OperationExecutionRecord, BeforeOperationEvent,
                                      AfterOperationEvent, TraceMetadataRecord>;

RecordKind kind_of(const MonitoringRecord& record);
std::int64_t logging_timestamp_ns(const MonitoringRecord& record);
std::int64_t trace_id_of(const MonitoringRecord& record);

}  // namespace otelbridge::records
