#include "otelbridge/signature.hpp"

#include <algorithm>
#include <array>

namespace otelbridge::records {

namespace {

constexpr std::array<std::string_view, 9> kModifiers = {
    "public", "private",      "protected", "static",  "final",
    "abstract", "synchronized", "native",    "default",
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    std::size_t start = i;
    while (i < s.size() && s[i] != ' ') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

}  // namespace

bool is_recognized_modifier(std::string_view token) {
  return std::find(kModifiers.begin(), kModifiers.end(), token) != kModifiers.end();
}

std::optional<OperationSignature> parse_signature(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;

  const std::size_t open = text.find('(');
  if (open == std::string_view::npos) return std::nullopt;
  if (text.back() != ')') return std::nullopt;
  const std::size_t close = text.size() - 1;
  if (close < open) return std::nullopt;

  const auto preamble = split_ws(text.substr(0, open));
  if (preamble.empty()) return std::nullopt;

  const std::string_view fq_method = preamble.back();
  const std::size_t method_dot = fq_method.rfind('.');
  if (method_dot == std::string_view::npos) return std::nullopt;

  OperationSignature sig;
  sig.method_name = std::string(fq_method.substr(method_dot + 1));
  const std::string_view fq_class = fq_method.substr(0, method_dot);
  if (sig.method_name.empty() || fq_class.empty()) return std::nullopt;

  const std::size_t class_dot = fq_class.rfind('.');
  if (class_dot == std::string_view::npos) {
    sig.class_name = std::string(fq_class);
  } else {
    sig.package_name = std::string(fq_class.substr(0, class_dot));
    sig.class_name = std::string(fq_class.substr(class_dot + 1));
    if (sig.class_name.empty()) return std::nullopt;
  }

  // Leading recognized modifiers; anything after them up to the name is the
  // return type (possibly multiple tokens, e.g. array or generic spellings).
  std::size_t i = 0;
  while (i + 1 < preamble.size() && is_recognized_modifier(preamble[i])) {
    sig.modifiers.emplace_back(preamble[i]);
    ++i;
  }
  for (; i + 1 < preamble.size(); ++i) {
    if (!sig.return_type.empty()) sig.return_type += ' ';
    sig.return_type += preamble[i];
  }

  const std::string_view params = text.substr(open + 1, close - open - 1);
  if (!trim(params).empty()) {
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = params.find(',', pos);
      const auto piece = trim(params.substr(pos, comma - pos));
      sig.parameter_types.emplace_back(piece);
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
  }
  return sig;
}

std::string OperationSignature::qualified_class() const {
  if (package_name.empty()) return class_name;
  return package_name + "." + class_name;
}

std::string OperationSignature::render() const {
  std::string out;
  for (const auto& mod : modifiers) {
    out += mod;
    out += ' ';
  }
  if (!return_type.empty()) {
    out += return_type;
    out += ' ';
  }
  out += qualified_class();
  out += '.';
  out += method_name;
  out += '(';
  for (std::size_t i = 0; i < parameter_types.size(); ++i) {
    if (i > 0) out += ", ";
    out += parameter_types[i];
  }
  out += ')';
  return out;
}

}  // namespace otelbridge::records
