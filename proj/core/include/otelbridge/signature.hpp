#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace otelbridge::records {

/// Parsed form of a textual operation signature:
///
///   [modifier ...] [returnType] package.Class.method(paramType, paramType)
///
/// The return type is empty for constructors; the package is empty for the
/// default package. render() reproduces the canonical text, so
/// parse_signature(s.render()) == s for every valid signature.
struct OperationSignature {
  std::vector<std::string> modifiers;
  std::string return_type;
  std::string package_name;
  std::string class_name;
  std::string method_name;
  std::vector<std::string> parameter_types;

  std::string render() const;

  /// package.Class, or just Class when the package is empty.
  std::string qualified_class() const;

  bool operator==(const OperationSignature&) const = default;
};

/// Parses the grammar above. Returns nullopt for malformed signatures:
/// missing "(", missing ")", or no "." before the method name.
std::optional<OperationSignature> parse_signature(std::string_view text);

/// True for the Java-style modifiers the grammar recognizes.
bool is_recognized_modifier(std::string_view token);

}  // namespace otelbridge::records
