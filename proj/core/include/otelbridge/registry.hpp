#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>

namespace otelbridge::records {

enum class RegistryError {
  kNone = 0,
  kNegativeId,
  kRebindConflict,
  kUnknownId,
};

const char* to_string(RegistryError err);

/// Integer-to-string table used by the binary wire format. One instance per
/// ingest connection; ids are non-negative and write-once.
class StringRegistry {
 public:
  /// Binds id -> value. Rebinding with the identical value is a no-op;
  /// rebinding with a different value fails and leaves the table unchanged.
  RegistryError bind(std::int32_t id, std::string value);

  /// Returns the bound string, or nullptr if the id is unbound.
  const std::string* resolve(std::int32_t id) const;

  bool contains(std::int32_t id) const { return entries_.count(id) != 0; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::unordered_map<std::int32_t, std::string> entries_;
};

}  // namespace otelbridge::records
