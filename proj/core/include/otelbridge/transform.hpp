#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "otelbridge/records.hpp"
#include "otelbridge/signature.hpp"

namespace otelbridge::transform {

/// Session id used when no TraceMetadataRecord was seen for a trace.
inline constexpr std::string_view kNoSessionId = "<no-session>";

/// Uniform representation of one finished operation invocation.
struct Execution {
  records::OperationSignature signature;
  std::string hostname;
  std::string session_id;
  std::int64_t trace_id = 0;
  std::int64_t tin_ns = 0;
  std::int64_t tout_ns = 0;
  std::int32_t eoi = 0;
  std::int32_t ess = 0;

  bool operator==(const Execution&) const = default;
};

/// Maps a state-based record to an Execution. Returns nullopt for invalid
/// records: sentinel (negative) trace id, negative eoi/ess, tin > tout, or an
/// unparseable signature. Dropped records are the caller's to count.
std::optional<Execution> from_oer(const records::OperationExecutionRecord& record);

enum class EventOutcome {
  kOk = 0,
  kUnbalanced,            // after-event on an empty stack or signature mismatch
  kMalformed,             // unparseable signature or end before start
  kIgnoredBrokenTrace,    // trace was already marked broken
  kConflictingMetadata,   // second metadata record with different content
};

/// Derives Executions from before/after operation events, one stack per
/// trace id. Assigns eoi in start order and ess from the stack depth;
/// executions are emitted in completion order (children before parents).
/// Any inconsistency marks the whole trace broken: its events are swallowed
/// until the state is evicted.
class EventTraceAssembler {
 public:
  struct Result {
    std::vector<Execution> executions;
    EventOutcome outcome = EventOutcome::kOk;
  };

  Result consume(const records::BeforeOperationEvent& event, std::int64_t now_ns);
  Result consume(const records::AfterOperationEvent& event, std::int64_t now_ns);
  Result consume(const records::TraceMetadataRecord& record, std::int64_t now_ns);

  /// Dispatch helper; `record` must not hold an OperationExecutionRecord.
  Result consume_event(const records::MonitoringRecord& record, std::int64_t now_ns);

  struct EvictedTrace {
    std::int64_t trace_id = 0;
    std::size_t open_frames = 0;
    bool broken = false;

    /// True when eviction lost data (open frames or a broken trace), as
    /// opposed to discarding the bookkeeping of a fully emitted trace.
    bool lossy() const { return open_frames > 0 || broken; }
  };

  /// Removes per-trace state idle longer than max_age_ns.
  std::vector<EvictedTrace> evict_stale(std::int64_t now_ns, std::int64_t max_age_ns);

  /// End-of-stream: removes and reports all remaining per-trace state.
  std::vector<EvictedTrace> drain();

  std::size_t open_trace_count() const { return traces_.size(); }

 private:
  struct OpenFrame {
    std::string operation_signature;
    std::int64_t start_ns = 0;
    std::int32_t eoi = 0;
    std::int32_t ess = 0;
  };
  struct TraceState {
    std::vector<OpenFrame> stack;
    std::int32_t next_eoi = 0;
    std::optional<records::TraceMetadataRecord> metadata;
    std::int64_t last_activity_ns = 0;
    bool broken = false;
  };

  TraceState& touch(std::int64_t trace_id, std::int64_t now_ns);

  std::unordered_map<std::int64_t, TraceState> traces_;
};

}  // namespace otelbridge::transform
