#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <string>
#include <variant>
#include <vector>

namespace cpda {

/// Runtime scalar. Doubles compare bitwise so trajectory diffs are exact.
using Value = std::variant<bool, std::int64_t, double, std::string>;

enum class ValueKind { Bool, Int, Float, String };

inline ValueKind kind_of(const Value& v) { return static_cast<ValueKind>(v.index()); }

inline const char* kind_name(ValueKind k) {
  switch (k) {
    case ValueKind::Bool: return "bool";
    case ValueKind::Int: return "int";
    case ValueKind::Float: return "float";
    case ValueKind::String: return "string";
  }
  return "?";
}

inline bool value_equal(const Value& a, const Value& b) {
  if (a.index() != b.index()) return false;
  if (std::holds_alternative<double>(a)) {
    return std::bit_cast<std::uint64_t>(std::get<double>(a)) ==
           std::bit_cast<std::uint64_t>(std::get<double>(b));
  }
  return a == b;
}

inline bool trajectory_equal(const std::vector<Value>& a, const std::vector<Value>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!value_equal(a[i], b[i])) return false;
  return true;
}

/// Shortest round-trip formatting for doubles keeps serialized artifacts
/// byte-stable across runs.
inline std::string format_double(double d) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", d);
  double back = 0;
  std::sscanf(buf, "%lf", &back);
  if (std::bit_cast<std::uint64_t>(back) == std::bit_cast<std::uint64_t>(d)) {
    for (int prec = 1; prec < 17; ++prec) {
      char shorter[64];
      std::snprintf(shorter, sizeof(shorter), "%.*g", prec, d);
      std::sscanf(shorter, "%lf", &back);
      if (std::bit_cast<std::uint64_t>(back) == std::bit_cast<std::uint64_t>(d))
        return shorter;
    }
  }
  return buf;
}

inline std::string value_str(const Value& v) {
  switch (kind_of(v)) {
    case ValueKind::Bool: return std::get<bool>(v) ? "true" : "false";
    case ValueKind::Int: return std::to_string(std::get<std::int64_t>(v));
    case ValueKind::Float: return format_double(std::get<double>(v));
    case ValueKind::String: return std::get<std::string>(v);
  }
  return "";
}

/// Escapes used by suite files and trajectory serialization: tokens are
/// whitespace-separated, so embedded spaces/newlines/pipes must be encoded.
inline std::string escape_token(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case ' ': out += "\\s"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\\': out += "\\\\"; break;
      case '|': out += "\\p"; break;
      default: out += c;
    }
  }
  if (out.empty()) out = "\\e";
  return out;
}

inline std::string unescape_token(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') { out += s[i]; continue; }
    if (++i >= s.size()) { out += '\\'; break; }
    switch (s[i]) {
      case 's': out += ' '; break;
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case 'p': out += '|'; break;
      case 'e': break;
      case '\\': out += '\\'; break;
      default: out += s[i];
    }
  }
  return out;
}

/// Bare suite tokens are typed by syntax: int / float / bool literals, else
/// string. A leading single quote forces string ('123 reads as "123").
inline Value parse_token(const std::string& raw) {
  std::string s = unescape_token(raw);
  if (!raw.empty() && raw[0] == '\'') return unescape_token(raw.substr(1));
  if (s == "true") return true;
  if (s == "false") return false;
  if (!s.empty()) {
    char* end = nullptr;
    errno = 0;
    long long i = std::strtoll(s.c_str(), &end, 10);
    if (errno == 0 && end && *end == '\0') return static_cast<std::int64_t>(i);
    errno = 0;
    double d = std::strtod(s.c_str(), &end);
    if (errno == 0 && end && *end == '\0' && end != s.c_str()) return d;
  }
  return s;
}

inline std::string token_str(const Value& v) {
  if (kind_of(v) == ValueKind::String) {
    const std::string& s = std::get<std::string>(v);
    // quote strings that would re-parse as another type
    std::string esc = escape_token(s);
    Value back = parse_token(esc);
    if (kind_of(back) != ValueKind::String) return "'" + esc;
    return esc;
  }
  return value_str(v);
}

}  // namespace cpda
