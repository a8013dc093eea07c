#include "otelbridge/codec.hpp"

#include <cstring>

namespace otelbridge::wire {

namespace {

void put_i32(std::vector<std::uint8_t>& out, std::int32_t v) {
  const auto u = static_cast<std::uint32_t>(v);
  out.push_back(static_cast<std::uint8_t>(u >> 24));
  out.push_back(static_cast<std::uint8_t>(u >> 16));
  out.push_back(static_cast<std::uint8_t>(u >> 8));
  out.push_back(static_cast<std::uint8_t>(u));
}

void put_i64(std::vector<std::uint8_t>& out, std::int64_t v) {
  const auto u = static_cast<std::uint64_t>(v);
  for (int shift = 56; shift >= 0; shift -= 8) {
    out.push_back(static_cast<std::uint8_t>(u >> shift));
  }
}

std::int32_t get_i32(const std::uint8_t* p) {
  return static_cast<std::int32_t>((std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
                                   (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]});
}

std::int64_t get_i64(const std::uint8_t* p) {
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) {
    u = (u << 8) | p[i];
  }
  return static_cast<std::int64_t>(u);
}

std::size_t frame_size_for(std::int32_t class_id) {
  switch (static_cast<records::RecordKind>(class_id)) {
    case records::RecordKind::kOperationExecution:
      return kOperationExecutionFrameBytes;
    case records::RecordKind::kBeforeOperationEvent:
    case records::RecordKind::kAfterOperationEvent:
      return kOperationEventFrameBytes;
    case records::RecordKind::kTraceMetadata:
      return kTraceMetadataFrameBytes;
  }
  return 0;
}

}  // namespace

const char* to_string(DecodeStatus status) {
  switch (status) {
    case DecodeStatus::kOk:
      return "ok";
    case DecodeStatus::kNeedMoreBytes:
      return "need more bytes";
    case DecodeStatus::kUnknownClassId:
      return "unknown class id";
    case DecodeStatus::kUnknownStringId:
      return "unknown string registry id";
    case DecodeStatus::kMalformedUtf8:
      return "malformed UTF-8 in registry entry";
    case DecodeStatus::kMalformedFrame:
      return "malformed frame";
    case DecodeStatus::kRegistryConflict:
      return "registry id rebound to a different string";
  }
  return "invalid status";
}

bool is_valid_utf8(std::string_view text) {
  const auto* p = reinterpret_cast<const unsigned char*>(text.data());
  const auto* end = p + text.size();
  while (p < end) {
    const unsigned char b = *p;
    if (b < 0x80) {
      ++p;
      continue;
    }
    int continuation = 0;
    unsigned char lo = 0x80, hi = 0xBF;  // bounds for the first continuation byte
    if (b >= 0xC2 && b <= 0xDF) {
      continuation = 1;
    } else if (b == 0xE0) {
      continuation = 2;
      lo = 0xA0;
    } else if (b >= 0xE1 && b <= 0xEC) {
      continuation = 2;
    } else if (b == 0xED) {
      continuation = 2;
      hi = 0x9F;  // exclude UTF-16 surrogates
    } else if (b >= 0xEE && b <= 0xEF) {
      continuation = 2;
    } else if (b == 0xF0) {
      continuation = 3;
      lo = 0x90;
    } else if (b >= 0xF1 && b <= 0xF3) {
      continuation = 3;
    } else if (b == 0xF4) {
      continuation = 3;
      hi = 0x8F;  // cap at U+10FFFF
    } else {
      return false;  // 0x80..0xC1 and 0xF5..0xFF are never valid leads
    }
    if (end - p < continuation + 1) return false;
    if (p[1] < lo || p[1] > hi) return false;
    for (int i = 2; i <= continuation; ++i) {
      if (p[i] < 0x80 || p[i] > 0xBF) return false;
    }
    p += continuation + 1;
  }
  return true;
}

DecodeResult decode_frame(std::span<const std::uint8_t> buffer,
                          records::StringRegistry& registry) {
  DecodeResult res;
  if (buffer.size() < 4) return res;

  const std::int32_t class_id = get_i32(buffer.data());
  if (class_id == kRegistryClassId) {
    if (buffer.size() < kRegistryEntryHeaderBytes) return res;
    const std::int32_t id = get_i32(buffer.data() + 4);
    const std::int32_t len = get_i32(buffer.data() + 8);
    if (len < 0) {
      res.status = DecodeStatus::kMalformedFrame;
      return res;
    }
    const std::size_t total = kRegistryEntryHeaderBytes + static_cast<std::size_t>(len);
    if (buffer.size() < total) return res;
    std::string value(reinterpret_cast<const char*>(buffer.data() + kRegistryEntryHeaderBytes),
                      static_cast<std::size_t>(len));
    if (!is_valid_utf8(value)) {
      res.status = DecodeStatus::kMalformedUtf8;
      return res;
    }
    switch (registry.bind(id, value)) {
      case records::RegistryError::kNone:
        break;
      case records::RegistryError::kNegativeId:
        res.status = DecodeStatus::kMalformedFrame;
        return res;
      default:
        res.status = DecodeStatus::kRegistryConflict;
        return res;
    }
    res.status = DecodeStatus::kOk;
    res.consumed = total;
    res.registry_entry = RegistryEntry{id, std::move(value)};
    return res;
  }

  const std::size_t frame_size = frame_size_for(class_id);
  if (frame_size == 0) {
    res.status = DecodeStatus::kUnknownClassId;
    return res;
  }
  if (buffer.size() < frame_size) return res;

  const std::uint8_t* p = buffer.data() + 4;
  auto read_i32 = [&p] {
    const std::int32_t v = get_i32(p);
    p += 4;
    return v;
  };
  auto read_i64 = [&p] {
    const std::int64_t v = get_i64(p);
    p += 8;
    return v;
  };
  bool unknown_string = false;
  auto read_string = [&](std::string& out) {
    const std::int32_t id = read_i32();
    if (const std::string* s = registry.resolve(id)) {
      out = *s;
    } else {
      unknown_string = true;
    }
  };

  records::MonitoringRecord record;
  const std::int64_t logging_ts = read_i64();
  switch (static_cast<records::RecordKind>(class_id)) {
    case records::RecordKind::kOperationExecution: {
      records::OperationExecutionRecord r;
      r.logging_timestamp_ns = logging_ts;
      read_string(r.operation_signature);
      read_string(r.session_id);
      r.trace_id = read_i64();
      r.tin_ns = read_i64();
      r.tout_ns = read_i64();
      read_string(r.hostname);
      r.eoi = read_i32();
      r.ess = read_i32();
      record = std::move(r);
      break;
    }
    case records::RecordKind::kBeforeOperationEvent:
    case records::RecordKind::kAfterOperationEvent: {
      auto fill = [&](auto& r) {
        r.logging_timestamp_ns = logging_ts;
        r.timestamp_ns = read_i64();
        r.trace_id = read_i64();
        r.order_index = read_i32();
        read_string(r.operation_signature);
        read_string(r.class_signature);
      };
      if (class_id == static_cast<std::int32_t>(records::RecordKind::kBeforeOperationEvent)) {
        records::BeforeOperationEvent r;
        fill(r);
        record = std::move(r);
      } else {
        records::AfterOperationEvent r;
        fill(r);
        record = std::move(r);
      }
      break;
    }
    case records::RecordKind::kTraceMetadata: {
      records::TraceMetadataRecord r;
      r.logging_timestamp_ns = logging_ts;
      r.trace_id = read_i64();
      r.thread_id = read_i64();
      read_string(r.session_id);
      read_string(r.hostname);
      r.parent_trace_id = read_i64();
      r.parent_order_id = read_i32();
      record = std::move(r);
      break;
    }
  }
  if (unknown_string) {
    res.status = DecodeStatus::kUnknownStringId;
    return res;
  }
  res.status = DecodeStatus::kOk;
  res.consumed = frame_size;
  res.record = std::move(record);
  return res;
}

std::int32_t EncodeRegistry::intern(std::string_view value, bool& is_new) {
  auto it = ids_.find(std::string(value));
  if (it != ids_.end()) {
    is_new = false;
    return it->second;
  }
  const std::int32_t id = next_id_++;
  ids_.emplace(std::string(value), id);
  is_new = true;
  return id;
}

void append_registry_entry(std::vector<std::uint8_t>& out, std::int32_t id,
                           std::string_view value) {
  put_i32(out, kRegistryClassId);
  put_i32(out, id);
  put_i32(out, static_cast<std::int32_t>(value.size()));
  out.insert(out.end(), value.begin(), value.end());
}

void encode_frame(const records::MonitoringRecord& record, EncodeRegistry& registry,
                  std::vector<std::uint8_t>& out) {
  auto intern = [&](const std::string& value) {
    bool is_new = false;
    const std::int32_t id = registry.intern(value, is_new);
    if (is_new) append_registry_entry(out, id, value);
    return id;
  };

  std::visit(
      [&](const auto& r) {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, records::OperationExecutionRecord>) {
          const std::int32_t sig = intern(r.operation_signature);
          const std::int32_t session = intern(r.session_id);
          const std::int32_t host = intern(r.hostname);
          put_i32(out, static_cast<std::int32_t>(records::RecordKind::kOperationExecution));
          put_i64(out, r.logging_timestamp_ns);
          put_i32(out, sig);
          put_i32(out, session);
          put_i64(out, r.trace_id);
          put_i64(out, r.tin_ns);
          put_i64(out, r.tout_ns);
          put_i32(out, host);
          put_i32(out, r.eoi);
          put_i32(out, r.ess);
        } else if constexpr (std::is_same_v<R, records::BeforeOperationEvent> ||
                             std::is_same_v<R, records::AfterOperationEvent>) {
          const std::int32_t sig = intern(r.operation_signature);
          const std::int32_t cls = intern(r.class_signature);
          const bool before = std::is_same_v<R, records::BeforeOperationEvent>;
          put_i32(out, static_cast<std::int32_t>(before
                                                     ? records::RecordKind::kBeforeOperationEvent
                                                     : records::RecordKind::kAfterOperationEvent));
          put_i64(out, r.logging_timestamp_ns);
          put_i64(out, r.timestamp_ns);
          put_i64(out, r.trace_id);
          put_i32(out, r.order_index);
          put_i32(out, sig);
          put_i32(out, cls);
        } else {
          const std::int32_t session = intern(r.session_id);
          const std::int32_t host = intern(r.hostname);
          put_i32(out, static_cast<std::int32_t>(records::RecordKind::kTraceMetadata));
          put_i64(out, r.logging_timestamp_ns);
          put_i64(out, r.trace_id);
          put_i64(out, r.thread_id);
          put_i32(out, session);
          put_i32(out, host);
          put_i64(out, r.parent_trace_id);
          put_i32(out, r.parent_order_id);
        }
      },
      record);
}

std::vector<std::uint8_t> encode_frame(const records::MonitoringRecord& record,
                                       EncodeRegistry& registry) {
  std::vector<std::uint8_t> out;
  encode_frame(record, registry, out);
  return out;
}

}  // namespace otelbridge::wire
