#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "otelbridge/records.hpp"
#include "otelbridge/registry.hpp"

namespace otelbridge::wire {

/// Class id marking a string-registry entry frame.
inline constexpr std::int32_t kRegistryClassId = -1;

/// Fixed frame sizes per record kind (class id + payload), in bytes.
inline constexpr std::size_t kOperationExecutionFrameBytes = 56;
inline constexpr std::size_t kOperationEventFrameBytes = 40;
inline constexpr std::size_t kTraceMetadataFrameBytes = 48;
/// Registry entry frames are 12 bytes of header plus the UTF-8 payload.
inline constexpr std::size_t kRegistryEntryHeaderBytes = 12;

struct RegistryEntry {
  std::int32_t id = 0;
  std::string value;

  bool operator==(const RegistryEntry&) const = default;
};

enum class DecodeStatus {
  kOk = 0,
  kNeedMoreBytes,    // buffer holds a prefix of a valid frame; not an error
  kUnknownClassId,
  kUnknownStringId,  // record references an id with no registry entry
  kMalformedUtf8,    // registry entry payload is not valid UTF-8
  kMalformedFrame,   // negative length or negative registry id
  kRegistryConflict, // registry entry rebinds an id to a different string
};

const char* to_string(DecodeStatus status);

struct DecodeResult {
  DecodeStatus status = DecodeStatus::kNeedMoreBytes;
  std::size_t consumed = 0;
  std::optional<records::MonitoringRecord> record;
  std::optional<RegistryEntry> registry_entry;

  bool ok() const { return status == DecodeStatus::kOk; }
};

/// Decodes one frame from the front of `buffer`. All integers are big-endian.
/// Registry entry frames are bound into `registry` as a side effect; record
/// frames resolve their string fields through it. Returns kNeedMoreBytes
/// whenever `buffer` is a proper prefix of a valid frame.
DecodeResult decode_frame(std::span<const std::uint8_t> buffer,
                          records::StringRegistry& registry);

/// Writer-side string table: assigns sequential ids on first use.
class EncodeRegistry {
 public:
  /// Returns the id for `value`; `is_new` is set when this call assigned it.
  std::int32_t intern(std::string_view value, bool& is_new);

  std::size_t size() const { return ids_.size(); }

 private:
  std::unordered_map<std::string, std::int32_t> ids_;
  std::int32_t next_id_ = 0;
};

void append_registry_entry(std::vector<std::uint8_t>& out, std::int32_t id,
                           std::string_view value);

/// Appends registry entries for any string field not yet interned, then the
/// record frame itself. The output decodes back to the same record.
void encode_frame(const records::MonitoringRecord& record, EncodeRegistry& registry,
                  std::vector<std::uint8_t>& out);

std::vector<std::uint8_t> encode_frame(const records::MonitoringRecord& record,
                                       EncodeRegistry& registry);

bool is_valid_utf8(std::string_view text);

}  // namespace otelbridge::wire
