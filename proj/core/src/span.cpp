#include "otelbridge/span.hpp"

#include <algorithm>
#include <bit>
#include <iterator>

namespace otelbridge::exporter {

namespace {

void put_u64_be(std::uint8_t* out, std::uint64_t value) {
  for (int i = 7; i >= 0; --i) {
    out[i] = static_cast<std::uint8_t>(value & 0xFF);
    value >>= 8;
  }
}

}  // namespace

TraceIdBytes derive_trace_id(std::int64_t kieker_trace_id) {
  TraceIdBytes bytes{};
  put_u64_be(bytes.data() + 8, static_cast<std::uint64_t>(kieker_trace_id));
  return bytes;
}

SpanIdBytes derive_span_id(std::int64_t kieker_trace_id, std::int32_t eoi) {
  std::uint64_t value = std::rotl(static_cast<std::uint64_t>(kieker_trace_id), 32) ^
                        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(eoi)) + 1);
  if (value == 0) value = 1;
  SpanIdBytes bytes{};
  put_u64_be(bytes.data(), value);
  return bytes;
}

SpanBatch map_trace(const reconstruct::ExecutionTrace& trace) {
  SpanBatch batch;
  batch.spans.reserve(trace.executions.size());
  for (std::size_t i = 0; i < trace.executions.size(); ++i) {
    const transform::Execution& execution = trace.executions[i];
    Span span;
    span.trace_id = derive_trace_id(trace.trace_id);
    span.span_id = derive_span_id(trace.trace_id, execution.eoi);
    const std::size_t p = reconstruct::parent_index(trace, i);
    if (p != reconstruct::kParentRoot && p != reconstruct::kParentNotFound) {
      span.parent_span_id = derive_span_id(trace.trace_id, trace.executions[p].eoi);
    }
    span.name = execution.signature.class_name + "." + execution.signature.method_name;
    span.start_ns = execution.tin_ns;
    span.end_ns = execution.tout_ns;
    span.attributes.emplace_back("code.namespace", execution.signature.qualified_class());
    span.attributes.emplace_back("code.function", execution.signature.method_name);
    if (execution.session_id != transform::kNoSessionId) {
      span.attributes.emplace_back("session.id", execution.session_id);
    }
    span.attributes.emplace_back("kieker.eoi", std::to_string(execution.eoi));
    span.attributes.emplace_back("kieker.ess", std::to_string(execution.ess));
    span.service_name = execution.hostname.empty() ? kUnknownServiceName : execution.hostname;
    batch.spans.push_back(std::move(span));
  }
  return batch;
}

std::vector<std::pair<std::string, std::vector<const Span*>>> SpanBatch::group_by_service()
    const {
  std::vector<std::pair<std::string, std::vector<const Span*>>> groups;
  for (const Span& span : spans) {
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& group) { return group.first == span.service_name; });
    if (it == groups.end()) {
      groups.emplace_back(span.service_name, std::vector<const Span*>{});
      it = std::prev(groups.end());
    }
    it->second.push_back(&span);
  }
  return groups;
}

std::string to_hex(const std::uint8_t* bytes, std::size_t size) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(size * 2);
  for (std::size_t i = 0; i < size; ++i) {
    out.push_back(kDigits[bytes[i] >> 4]);
    out.push_back(kDigits[bytes[i] & 0xF]);
  }
  return out;
}

}  // namespace otelbridge::exporter
