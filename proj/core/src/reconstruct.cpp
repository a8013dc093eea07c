#include "otelbridge/reconstruct.hpp"

#include <algorithm>
#include <utility>

namespace otelbridge::reconstruct {

std::size_t parent_index(const ExecutionTrace& trace, std::size_t i) {
  const auto& executions = trace.executions;
  if (i >= executions.size()) return kParentNotFound;
  const std::int32_t ess = executions[i].ess;
  if (ess == 0) return kParentRoot;
  for (std::size_t j = i; j-- > 0;) {
    if (executions[j].ess == ess - 1) return j;
  }
  return kParentNotFound;
}

std::optional<std::string> validate_trace(const ExecutionTrace& trace) {
  const auto& executions = trace.executions;
  if (executions.empty()) return "trace has no executions";
  for (std::size_t i = 0; i < executions.size(); ++i) {
    const auto& e = executions[i];
    if (e.trace_id != trace.trace_id) {
      return "execution at eoi " + std::to_string(e.eoi) + " belongs to trace " +
             std::to_string(e.trace_id);
    }
    if (e.eoi != static_cast<std::int32_t>(i)) {
      return "expected eoi " + std::to_string(i) + ", found " + std::to_string(e.eoi);
    }
    if (e.tin_ns > e.tout_ns) {
      return "eoi " + std::to_string(i) + " ends before it starts";
    }
  }
  if (executions.front().ess != 0) {
    return "root execution has ess " + std::to_string(executions.front().ess);
  }
  for (std::size_t i = 1; i < executions.size(); ++i) {
    const std::int32_t ess = executions[i].ess;
    if (ess < 0) return "eoi " + std::to_string(i) + " has negative ess";
    if (ess > executions[i - 1].ess + 1) {
      return "stack depth jumps from " + std::to_string(executions[i - 1].ess) + " to " +
             std::to_string(ess) + " at eoi " + std::to_string(i);
    }
    const std::size_t p = parent_index(trace, i);
    if (p == kParentNotFound) {
      return "no parent candidate for eoi " + std::to_string(i);
    }
    const auto& child = executions[i];
    const auto& parent = executions[p];
    if (child.tin_ns < parent.tin_ns || child.tout_ns > parent.tout_ns) {
      return "interval of eoi " + std::to_string(i) + " escapes its parent eoi " +
             std::to_string(p);
    }
  }
  return std::nullopt;
}

Reconstructor::Reconstructor(ReconstructorConfig config) : config_(config) {}

void Reconstructor::mark_broken(TraceBuffer& buffer) {
  if (buffer.broken) return;
  buffer.broken = true;
  // Keep the tombstone so late arrivals are swallowed, but free the payload.
  buffered_executions_ -= buffer.by_eoi.size();
  buffer.by_eoi.clear();
}

bool Reconstructor::structurally_complete(const TraceBuffer& buffer) const {
  if (buffer.broken || buffer.by_eoi.empty()) return false;
  if (buffer.by_eoi.size() != static_cast<std::size_t>(buffer.max_seen_eoi) + 1) return false;
  const auto root = buffer.by_eoi.find(0);
  if (root == buffer.by_eoi.end() || root->second.ess != 0) return false;
  return root->second.tin_ns <= buffer.min_tin_ns && root->second.tout_ns >= buffer.max_tout_ns;
}

IncompleteTraceReport Reconstructor::report_for(std::int64_t trace_id, const TraceBuffer& buffer,
                                                const char* reason) const {
  IncompleteTraceReport report;
  report.trace_id = trace_id;
  report.buffered_executions = buffer.by_eoi.size();
  report.broken = buffer.broken;
  report.reason = reason;
  return report;
}

std::vector<IncompleteTraceReport> Reconstructor::evict_oldest_if_over_capacity(
    std::int64_t protected_trace) {
  std::vector<IncompleteTraceReport> evicted;
  while (buffers_.size() > config_.max_buffered_traces) {
    auto victim = buffers_.end();
    for (auto it = buffers_.begin(); it != buffers_.end(); ++it) {
      if (it->first == protected_trace) continue;
      if (victim == buffers_.end() ||
          std::pair(it->second.last_activity_ns, it->first) <
              std::pair(victim->second.last_activity_ns, victim->first)) {
        victim = it;
      }
    }
    if (victim == buffers_.end()) break;  // only the protected trace remains
    evicted.push_back(report_for(victim->first, victim->second, "capacity"));
    buffered_executions_ -= victim->second.by_eoi.size();
    buffers_.erase(victim);
  }
  return evicted;
}

Reconstructor::AddResult Reconstructor::add_execution(transform::Execution execution,
                                                      std::int64_t now_ns) {
  AddResult result;
  const std::int64_t trace_id = execution.trace_id;
  auto [it, inserted] = buffers_.try_emplace(trace_id);
  TraceBuffer& buffer = it->second;
  buffer.last_activity_ns = now_ns;

  if (execution.eoi < 0) {
    mark_broken(buffer);
    result.trace_broken = true;
  } else if (!buffer.broken) {
    if (buffer.by_eoi.count(execution.eoi) != 0) {
      result.duplicate_eoi = true;
      mark_broken(buffer);
      result.trace_broken = true;
    } else {
      if (buffer.by_eoi.empty()) {
        buffer.min_tin_ns = execution.tin_ns;
        buffer.max_tout_ns = execution.tout_ns;
      } else {
        buffer.min_tin_ns = std::min(buffer.min_tin_ns, execution.tin_ns);
        buffer.max_tout_ns = std::max(buffer.max_tout_ns, execution.tout_ns);
      }
      buffer.max_seen_eoi = std::max(buffer.max_seen_eoi, execution.eoi);
      buffer.by_eoi.emplace(execution.eoi, std::move(execution));
      ++buffered_executions_;
      if (buffer.by_eoi.size() > config_.max_trace_size) {
        mark_broken(buffer);
        result.trace_broken = true;
      }
    }
  }

  if (structurally_complete(buffer)) {
    ExecutionTrace trace;
    trace.trace_id = trace_id;
    trace.executions.reserve(buffer.by_eoi.size());
    for (std::int32_t eoi = 0; eoi <= buffer.max_seen_eoi; ++eoi) {
      trace.executions.push_back(std::move(buffer.by_eoi.at(eoi)));
    }
    buffered_executions_ -= trace.executions.size();
    if (validate_trace(trace).has_value()) {
      // Structurally complete but semantically inconsistent: poison, never emit.
      buffer.by_eoi.clear();
      buffer.broken = true;
      result.trace_broken = true;
    } else {
      trace.complete = true;
      buffers_.erase(trace_id);
      result.completed.push_back(std::move(trace));
    }
  }

  result.evicted = evict_oldest_if_over_capacity(trace_id);
  return result;
}

std::vector<IncompleteTraceReport> Reconstructor::evict_expired(std::int64_t now_ns,
                                                                std::int64_t max_age_ns) {
  std::vector<std::int64_t> expired;
  for (const auto& [trace_id, buffer] : buffers_) {
    if (now_ns - buffer.last_activity_ns > max_age_ns) expired.push_back(trace_id);
  }
  std::sort(expired.begin(), expired.end());
  std::vector<IncompleteTraceReport> reports;
  reports.reserve(expired.size());
  for (std::int64_t trace_id : expired) {
    auto it = buffers_.find(trace_id);
    reports.push_back(report_for(trace_id, it->second, "timeout"));
    buffered_executions_ -= it->second.by_eoi.size();
    buffers_.erase(it);
  }
  return reports;
}

std::vector<IncompleteTraceReport> Reconstructor::drain() {
  std::vector<std::int64_t> remaining;
  remaining.reserve(buffers_.size());
  for (const auto& [trace_id, buffer] : buffers_) remaining.push_back(trace_id);
  std::sort(remaining.begin(), remaining.end());
  std::vector<IncompleteTraceReport> reports;
  reports.reserve(remaining.size());
  for (std::int64_t trace_id : remaining) {
    auto it = buffers_.find(trace_id);
    reports.push_back(report_for(trace_id, it->second, "shutdown"));
  }
  buffers_.clear();
  buffered_executions_ = 0;
  return reports;
}

}  // namespace otelbridge::reconstruct
