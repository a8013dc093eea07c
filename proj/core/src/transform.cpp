#include "otelbridge/transform.hpp"

#include <algorithm>
#include <limits>

namespace otelbridge::transform {

std::optional<Execution> from_oer(const records::OperationExecutionRecord& record) {
  if (record.trace_id < 0 || record.eoi < 0 || record.ess < 0) return std::nullopt;
  if (record.tin_ns > record.tout_ns) return std::nullopt;
  auto signature = records::parse_signature(record.operation_signature);
  if (!signature) return std::nullopt;

  Execution e;
  e.signature = std::move(*signature);
  e.hostname = record.hostname;
  e.session_id = record.session_id;
  e.trace_id = record.trace_id;
  e.tin_ns = record.tin_ns;
  e.tout_ns = record.tout_ns;
  e.eoi = record.eoi;
  e.ess = record.ess;
  return e;
}

EventTraceAssembler::TraceState& EventTraceAssembler::touch(std::int64_t trace_id,
                                                            std::int64_t now_ns) {
  TraceState& state = traces_[trace_id];
  state.last_activity_ns = now_ns;
  return state;
}

EventTraceAssembler::Result EventTraceAssembler::consume(
    const records::BeforeOperationEvent& event, std::int64_t now_ns) {
  TraceState& state = touch(event.trace_id, now_ns);
  if (state.broken) return {{}, EventOutcome::kIgnoredBrokenTrace};

  OpenFrame frame;
  frame.operation_signature = event.operation_signature;
  frame.start_ns = event.timestamp_ns;
  frame.eoi = state.next_eoi++;
  frame.ess = static_cast<std::int32_t>(state.stack.size());
  state.stack.push_back(std::move(frame));
  return {};
}

EventTraceAssembler::Result EventTraceAssembler::consume(
    const records::AfterOperationEvent& event, std::int64_t now_ns) {
  TraceState& state = touch(event.trace_id, now_ns);
  if (state.broken) return {{}, EventOutcome::kIgnoredBrokenTrace};

  if (state.stack.empty() || state.stack.back().operation_signature != event.operation_signature) {
    state.broken = true;
    state.stack.clear();
    return {{}, EventOutcome::kUnbalanced};
  }
  OpenFrame frame = std::move(state.stack.back());
  state.stack.pop_back();

  auto signature = records::parse_signature(frame.operation_signature);
  if (!signature || event.timestamp_ns < frame.start_ns) {
    state.broken = true;
    state.stack.clear();
    return {{}, EventOutcome::kMalformed};
  }

  Execution e;
  e.signature = std::move(*signature);
  e.trace_id = event.trace_id;
  e.tin_ns = frame.start_ns;
  e.tout_ns = event.timestamp_ns;
  e.eoi = frame.eoi;
  e.ess = frame.ess;
  if (state.metadata) {
    e.hostname = state.metadata->hostname;
    e.session_id = state.metadata->session_id;
  } else {
    e.session_id = std::string(kNoSessionId);
  }

  Result result;
  result.executions.push_back(std::move(e));
  return result;
}

EventTraceAssembler::Result EventTraceAssembler::consume(
    const records::TraceMetadataRecord& record, std::int64_t now_ns) {
  TraceState& state = touch(record.trace_id, now_ns);
  if (state.broken) return {{}, EventOutcome::kIgnoredBrokenTrace};

  if (!state.metadata) {
    state.metadata = record;
    return {};
  }
  // First record wins; an identical duplicate is a no-op.
  if (*state.metadata == record) return {};
  return {{}, EventOutcome::kConflictingMetadata};
}

EventTraceAssembler::Result EventTraceAssembler::consume_event(
    const records::MonitoringRecord& record, std::int64_t now_ns) {
  if (const auto* before = std::get_if<records::BeforeOperationEvent>(&record)) {
    return consume(*before, now_ns);
  }
  if (const auto* after = std::get_if<records::AfterOperationEvent>(&record)) {
    return consume(*after, now_ns);
  }
  if (const auto* meta = std::get_if<records::TraceMetadataRecord>(&record)) {
    return consume(*meta, now_ns);
  }
  return {{}, EventOutcome::kMalformed};
}

std::vector<EventTraceAssembler::EvictedTrace> EventTraceAssembler::evict_stale(
    std::int64_t now_ns, std::int64_t max_age_ns) {
  std::vector<EvictedTrace> evicted;
  for (auto it = traces_.begin(); it != traces_.end();) {
    if (now_ns - it->second.last_activity_ns > max_age_ns) {
      evicted.push_back({it->first, it->second.stack.size(), it->second.broken});
      it = traces_.erase(it);
    } else {
      ++it;
    }
  }
  std::sort(evicted.begin(), evicted.end(),
            [](const EvictedTrace& a, const EvictedTrace& b) { return a.trace_id < b.trace_id; });
  return evicted;
}

std::vector<EventTraceAssembler::EvictedTrace> EventTraceAssembler::drain() {
  return evict_stale(std::numeric_limits<std::int64_t>::max(), -1);
}

}  // namespace otelbridge::transform
