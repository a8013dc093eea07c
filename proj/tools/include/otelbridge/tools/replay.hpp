#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "otelbridge/records.hpp"

namespace otelbridge::tools {

struct ReplayParseError : std::runtime_error {
  ReplayParseError(const std::string& file, int line, const std::string& reason)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + reason),
        file(file),
        line(line) {}

  std::string file;
  int line = 0;
};

/// Text fixture format, one line per entry:
///   map file:  $<id>=<fully.qualified.RecordTypeName>
///   dat file:  $<id>;<loggingTimestamp>;<field>;...   (declaration order)
/// Type names match on their last dotted component; string fields must not
/// contain ';'.
struct ReplayLog {
  std::vector<records::MonitoringRecord> entries;
};

ReplayLog read_replay_log(const std::string& map_path,
                          const std::vector<std::string>& dat_paths);

void write_replay_log(const std::vector<records::MonitoringRecord>& entries,
                      const std::string& map_path, const std::string& dat_path);

struct ReplayReport {
  std::size_t sent = 0;
  std::size_t bytes = 0;
};

/// Re-encodes the log and ships it over one connection. Inter-record delays
/// are loggingTimestamp deltas divided by speedup; an infinite speedup sends
/// back-to-back. The sleeper is injectable for tests.
ReplayReport replay_log(const ReplayLog& log, const std::string& host, std::uint16_t port,
                        double speedup,
                        const std::function<void(std::int64_t)>& sleep_ns = {});

}  // namespace otelbridge::tools
