#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "otelbridge/transform.hpp"

namespace otelbridge::reconstruct {

/// One complete call tree: executions sorted ascending by eoi (which runs
/// 0..n-1 without gaps), rooted at the unique execution with ess 0.
struct ExecutionTrace {
  std::int64_t trace_id = 0;
  std::vector<transform::Execution> executions;
  bool complete = false;
};

/// parent_index sentinel: executions[i] is the root.
inline constexpr std::size_t kParentRoot = static_cast<std::size_t>(-1);
/// parent_index sentinel: no execution can be the parent; the trace is invalid.
inline constexpr std::size_t kParentNotFound = static_cast<std::size_t>(-2);

/// Index of the parent of executions[i]: the closest earlier execution one
/// stack level up, i.e. the greatest j < i with ess[j] == ess[i] - 1.
std::size_t parent_index(const ExecutionTrace& trace, std::size_t i);

/// Full structural validation: gap-free eoi starting at 0, root at ess 0,
/// stack depth never jumping by more than +1, every parent resolvable, and
/// parent intervals containing child intervals. Returns a description of the
/// first violation, or nullopt for a valid trace.
std::optional<std::string> validate_trace(const ExecutionTrace& trace);

struct ReconstructorConfig {
  std::size_t max_buffered_traces = 10000;
  std::size_t max_trace_size = 100000;
};

struct IncompleteTraceReport {
  std::int64_t trace_id = 0;
  std::size_t buffered_executions = 0;
  bool broken = false;
  const char* reason = "timeout";  // "timeout" | "capacity" | "shutdown"
};

/// Buffers per-trace executions until each trace is structurally complete:
/// all of eoi 0..maxSeen present and the root's time interval containing
/// every buffered interval. Completed traces are validated and emitted;
/// anything inconsistent is marked broken and only ever leaves through
/// eviction.
class Reconstructor {
 public:
  explicit Reconstructor(ReconstructorConfig config = {});

  struct AddResult {
    std::vector<ExecutionTrace> completed;
    std::vector<IncompleteTraceReport> evicted;  // capacity evictions
    bool duplicate_eoi = false;
    bool trace_broken = false;  // this call marked the trace broken
  };

  AddResult add_execution(transform::Execution execution, std::int64_t now_ns);

  /// Removes and reports every trace idle longer than max_age_ns; broken
  /// traces leave on the same schedule.
  std::vector<IncompleteTraceReport> evict_expired(std::int64_t now_ns, std::int64_t max_age_ns);

  /// End-of-stream: removes and reports everything still buffered.
  std::vector<IncompleteTraceReport> drain();

  std::size_t buffered_trace_count() const { return buffers_.size(); }
  std::size_t buffered_execution_count() const { return buffered_executions_; }

 private:
  struct TraceBuffer {
    std::unordered_map<std::int32_t, transform::Execution> by_eoi;
    std::int32_t max_seen_eoi = -1;
    std::int64_t min_tin_ns = 0;
    std::int64_t max_tout_ns = 0;
    std::int64_t last_activity_ns = 0;
    bool broken = false;
  };

  void mark_broken(TraceBuffer& buffer);
  bool structurally_complete(const TraceBuffer& buffer) const;
  std::vector<IncompleteTraceReport> evict_oldest_if_over_capacity(std::int64_t protected_trace);
  IncompleteTraceReport report_for(std::int64_t trace_id, const TraceBuffer& buffer,
                                   const char* reason) const;

  ReconstructorConfig config_;
  std::unordered_map<std::int64_t, TraceBuffer> buffers_;
  std::size_t buffered_executions_ = 0;
};

}  // namespace otelbridge::reconstruct
