#include "otelbridge/records.hpp"

namespace otelbridge::records {

const char* to_string(RecordKind kind) {
  switch (kind) {
    case RecordKind::kOperationExecution:
      return "OperationExecutionRecord";
    case RecordKind::kBeforeOperationEvent:
      return "BeforeOperationEvent";
    case RecordKind::kAfterOperationEvent:
      return "AfterOperationEvent";
    case RecordKind::kTraceMetadata:
      return "TraceMetadataRecord";
  }
  return "UnknownRecord";
}

RecordKind kind_of(const MonitoringRecord& record) {
  switch (record.index()) {
    case 0:
      return RecordKind::kOperationExecution;
    case 1:
      return RecordKind::kBeforeOperationEvent;
    case 2:
      return RecordKind::kAfterOperationEvent;
    default:
      return RecordKind::kTraceMetadata;
  }
}

std::int64_t logging_timestamp_ns(const MonitoringRecord& record) {
  return std::visit([](const auto& r) { return r.logging_timestamp_ns; }, record);
}

std::int64_t trace_id_of(const MonitoringRecord& record) {
  return std::visit([](const auto& r) { return r.trace_id; }, record);
}

}  // namespace otelbridge::records
