#include "otelbridge/registry.hpp"

namespace otelbridge::records {

const char* to_string(RegistryError err) {
  switch (err) {
    case RegistryError::kNone:
      return "no error";
    case RegistryError::kNegativeId:
      return "negative registry id";
    case RegistryError::kRebindConflict:
      return "registry id already bound to a different string";
    case RegistryError::kUnknownId:
      return "unknown registry id";
  }
  return "invalid error code";
}

RegistryError StringRegistry::bind(std::int32_t id, std::string value) {
  if (id < 0) {
    return RegistryError::kNegativeId;
  }
  auto [it, inserted] = entries_.try_emplace(id, std::move(value));
  if (!inserted && it->second != value) {
    return RegistryError::kRebindConflict;
  }
  return RegistryError::kNone;
}

const std::string* StringRegistry::resolve(std::int32_t id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

}  // namespace otelbridge::records
