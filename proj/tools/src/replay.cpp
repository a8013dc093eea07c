#include "otelbridge/tools/replay.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>
#include <unordered_map>

#include "otelbridge/codec.hpp"
#include "otelbridge/tools/tcp_client.hpp"

namespace otelbridge::tools {

namespace {

constexpr const char* kTypeNames[] = {
    "kieker.common.record.controlflow.OperationExecutionRecord",
    "kieker.common.record.flow.trace.operation.BeforeOperationEvent",
    "kieker.common.record.flow.trace.operation.AfterOperationEvent",
    "kieker.common.record.flow.trace.TraceMetadataRecord",
};

std::string type_name_for(records::RecordKind kind) {
  return kTypeNames[static_cast<int>(kind) - 1];
}

std::string_view last_component(std::string_view name) {
  const auto dot = name.rfind('.');
  return dot == std::string_view::npos ? name : name.substr(dot + 1);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

template <typename Int>
Int parse_int(std::string_view text, const std::string& file, int line) {
  Int value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ReplayParseError(file, line, "not an integer: '" + std::string(text) + "'");
  }
  return value;
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

records::MonitoringRecord parse_dat_line(records::RecordKind kind,
                                         const std::vector<std::string_view>& fields,
                                         const std::string& file, int line) {
  const auto require_fields = [&](std::size_t n) {
    if (fields.size() != n) {
      throw ReplayParseError(file, line,
                             "expected " + std::to_string(n) + " fields, found " +
                                 std::to_string(fields.size()));
    }
  };
  // fields[0] is the $id, fields[1] the logging timestamp.
  switch (kind) {
    case records::RecordKind::kOperationExecution: {
      require_fields(10);
      records::OperationExecutionRecord r;
      r.logging_timestamp_ns = parse_int<std::int64_t>(fields[1], file, line);
      r.operation_signature = std::string(fields[2]);
      r.session_id = std::string(fields[3]);
      r.trace_id = parse_int<std::int64_t>(fields[4], file, line);
      r.tin_ns = parse_int<std::int64_t>(fields[5], file, line);
      r.tout_ns = parse_int<std::int64_t>(fields[6], file, line);
      r.hostname = std::string(fields[7]);
      r.eoi = parse_int<std::int32_t>(fields[8], file, line);
      r.ess = parse_int<std::int32_t>(fields[9], file, line);
      return r;
    }
    case records::RecordKind::kBeforeOperationEvent:
    case records::RecordKind::kAfterOperationEvent: {
      require_fields(7);
      const std::int64_t logging_timestamp = parse_int<std::int64_t>(fields[1], file, line);
      const std::int64_t timestamp = parse_int<std::int64_t>(fields[2], file, line);
      const std::int64_t trace_id = parse_int<std::int64_t>(fields[3], file, line);
      const std::int32_t order_index = parse_int<std::int32_t>(fields[4], file, line);
      if (kind == records::RecordKind::kBeforeOperationEvent) {
        records::BeforeOperationEvent r;
        r.logging_timestamp_ns = logging_timestamp;
        r.timestamp_ns = timestamp;
        r.trace_id = trace_id;
        r.order_index = order_index;
        r.operation_signature = std::string(fields[5]);
        r.class_signature = std::string(fields[6]);
        return r;
      }
      records::AfterOperationEvent r;
      r.logging_timestamp_ns = logging_timestamp;
      r.timestamp_ns = timestamp;
      r.trace_id = trace_id;
      r.order_index = order_index;
      r.operation_signature = std::string(fields[5]);
      r.class_signature = std::string(fields[6]);
      return r;
    }
    case records::RecordKind::kTraceMetadata: {
      require_fields(8);
      records::TraceMetadataRecord r;
      r.logging_timestamp_ns = parse_int<std::int64_t>(fields[1], file, line);
      r.trace_id = parse_int<std::int64_t>(fields[2], file, line);
      r.thread_id = parse_int<std::int64_t>(fields[3], file, line);
      r.session_id = std::string(fields[4]);
      r.hostname = std::string(fields[5]);
      r.parent_trace_id = parse_int<std::int64_t>(fields[6], file, line);
      r.parent_order_id = parse_int<std::int32_t>(fields[7], file, line);
      return r;
    }
  }
  throw ReplayParseError(file, line, "unreachable record kind");
}

std::string dat_line_for(const records::MonitoringRecord& record, std::int32_t type_id) {
  std::string line = "$" + std::to_string(type_id) + ";" +
                     std::to_string(records::logging_timestamp_ns(record));
  const auto add = [&line](const auto& field) {
    if constexpr (std::is_convertible_v<decltype(field), std::string_view>) {
      line += ";";
      line += field;
    } else {
      line += ";" + std::to_string(field);
    }
  };
  std::visit(
      [&](const auto& r) {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, records::OperationExecutionRecord>) {
          add(r.operation_signature);
          add(r.session_id);
          add(r.trace_id);
          add(r.tin_ns);
          add(r.tout_ns);
          add(r.hostname);
          add(r.eoi);
          add(r.ess);
        } else if constexpr (std::is_same_v<R, records::BeforeOperationEvent> ||
                             std::is_same_v<R, records::AfterOperationEvent>) {
          add(r.timestamp_ns);
          add(r.trace_id);
          add(r.order_index);
          add(r.operation_signature);
          add(r.class_signature);
        } else {
          add(r.trace_id);
          add(r.thread_id);
          add(r.session_id);
          add(r.hostname);
          add(r.parent_trace_id);
          add(r.parent_order_id);
        }
      },
      record);
  return line;
}

}  // namespace

ReplayLog read_replay_log(const std::string& map_path,
                          const std::vector<std::string>& dat_paths) {
  std::unordered_map<std::int32_t, records::RecordKind> types;
  {
    std::ifstream map_file(map_path);
    if (!map_file) throw ReplayParseError(map_path, 0, "cannot open file");
    std::string raw;
    int line_no = 0;
    while (std::getline(map_file, raw)) {
      ++line_no;
      const std::string_view line = strip_cr(raw);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (line[0] != '$' || eq == std::string_view::npos) {
        throw ReplayParseError(map_path, line_no, "expected '$<id>=<type-name>'");
      }
      const auto id = parse_int<std::int32_t>(line.substr(1, eq - 1), map_path, line_no);
      const std::string_view simple = last_component(line.substr(eq + 1));
      records::RecordKind kind;
      if (simple == "OperationExecutionRecord") {
        kind = records::RecordKind::kOperationExecution;
      } else if (simple == "BeforeOperationEvent") {
        kind = records::RecordKind::kBeforeOperationEvent;
      } else if (simple == "AfterOperationEvent") {
        kind = records::RecordKind::kAfterOperationEvent;
      } else if (simple == "TraceMetadataRecord") {
        kind = records::RecordKind::kTraceMetadata;
      } else {
        throw ReplayParseError(map_path, line_no,
                               "unsupported record type '" + std::string(simple) + "'");
      }
      if (!types.emplace(id, kind).second) {
        throw ReplayParseError(map_path, line_no, "duplicate type id $" + std::to_string(id));
      }
    }
  }

  ReplayLog log;
  for (const std::string& dat_path : dat_paths) {
    std::ifstream dat_file(dat_path);
    if (!dat_file) throw ReplayParseError(dat_path, 0, "cannot open file");
    std::string raw;
    int line_no = 0;
    while (std::getline(dat_file, raw)) {
      ++line_no;
      const std::string_view line = strip_cr(raw);
      if (line.empty()) continue;
      const auto fields = split(line, ';');
      if (fields[0].empty() || fields[0][0] != '$') {
        throw ReplayParseError(dat_path, line_no, "expected '$<id>' in first field");
      }
      if (fields.size() < 2) {
        throw ReplayParseError(dat_path, line_no, "missing logging timestamp");
      }
      const auto id = parse_int<std::int32_t>(fields[0].substr(1), dat_path, line_no);
      const auto type = types.find(id);
      if (type == types.end()) {
        throw ReplayParseError(dat_path, line_no,
                               "type id $" + std::to_string(id) + " not in map file");
      }
      log.entries.push_back(parse_dat_line(type->second, fields, dat_path, line_no));
    }
  }
  return log;
}

void write_replay_log(const std::vector<records::MonitoringRecord>& entries,
                      const std::string& map_path, const std::string& dat_path) {
  std::unordered_map<int, std::int32_t> type_ids;  // RecordKind -> $id
  std::ofstream map_file(map_path, std::ios::trunc);
  std::ofstream dat_file(dat_path, std::ios::trunc);
  for (const auto& record : entries) {
    const records::RecordKind kind = records::kind_of(record);
    auto [it, inserted] = type_ids.emplace(static_cast<int>(kind),
                                           static_cast<std::int32_t>(type_ids.size()));
    if (inserted) {
      map_file << "$" << it->second << "=" << type_name_for(kind) << "\n";
    }
    dat_file << dat_line_for(record, it->second) << "\n";
  }
}

ReplayReport replay_log(const ReplayLog& log, const std::string& host, std::uint16_t port,
                        double speedup,
                        const std::function<void(std::int64_t)>& sleep_ns) {
  std::function<void(std::int64_t)> do_sleep = sleep_ns;
  if (!do_sleep) {
    do_sleep = [](std::int64_t ns) { std::this_thread::sleep_for(std::chrono::nanoseconds(ns)); };
  }
  TcpClient client(host, port);
  wire::EncodeRegistry registry;
  std::vector<std::uint8_t> buffer;
  ReplayReport report;
  std::int64_t previous_ts = 0;
  bool first = true;
  for (const auto& record : log.entries) {
    const std::int64_t ts = records::logging_timestamp_ns(record);
    if (!first && std::isfinite(speedup)) {
      const std::int64_t delta = ts - previous_ts;
      if (delta > 0) {
        const auto delay = static_cast<std::int64_t>(static_cast<double>(delta) / speedup);
        if (delay > 0) do_sleep(delay);
      }
    }
    previous_ts = ts;
    first = false;
    buffer.clear();
    wire::encode_frame(record, registry, buffer);
    client.send_all(buffer.data(), buffer.size());
    ++report.sent;
    report.bytes += buffer.size();
  }
  client.close();
  return report;
}

}  // namespace otelbridge::tools
