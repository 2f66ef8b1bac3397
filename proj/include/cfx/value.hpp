#ifndef CFX_VALUE_HPP
#define CFX_VALUE_HPP

#include <charconv>
#include <chrono>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>

#include "cfx/error.hpp"

namespace cfx {

/// UTC instant in milliseconds since the Unix epoch.
struct Timestamp {
  std::int64_t millis = 0;
  friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

enum class ValueKind { Integer, Real, Text, Timestamp };

inline std::string_view to_string(ValueKind kind) {
  switch (kind) {
    case ValueKind::Integer: return "int";
    case ValueKind::Real: return "float";
    case ValueKind::Text: return "string";
    case ValueKind::Timestamp: return "date";
  }
  return "?";
}

using AttributeValue = std::variant<std::int64_t, double, std::string, Timestamp>;
using MaybeValue = std::optional<AttributeValue>;

inline ValueKind kind_of(const AttributeValue& v) { return static_cast<ValueKind>(v.index()); }

inline bool is_numeric(const AttributeValue& v) { return kind_of(v) != ValueKind::Text; }

/// Numeric view of a value; timestamps map to their millisecond count.
inline std::optional<double> as_number(const AttributeValue& v) {
  switch (kind_of(v)) {
    case ValueKind::Integer: return static_cast<double>(std::get<std::int64_t>(v));
    case ValueKind::Real: return std::get<double>(v);
    case ValueKind::Timestamp: return static_cast<double>(std::get<Timestamp>(v).millis);
    case ValueKind::Text: return std::nullopt;
  }
  return std::nullopt;
}

/// Rebuilds a value of `kind` from a number; integers round half-up.
inline AttributeValue from_number(double x, ValueKind kind) {
  switch (kind) {
    case ValueKind::Integer: return static_cast<std::int64_t>(std::floor(x + 0.5));
    case ValueKind::Timestamp: return Timestamp{static_cast<std::int64_t>(std::floor(x + 0.5))};
    default: return x;
  }
}

// ---------------------------------------------------------------------------
// Number formatting

/// Shortest round-trip representation, always marked as a real ("2.0", "1e+20").
inline std::string format_real(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  std::string out(buf, res.ptr);
  if (out.find_first_of(".eEn") == std::string::npos) out += ".0";
  return out;
}

/// Human-facing number: integral values without a fraction, otherwise the shortest round-trip form.
inline std::string format_number(double x) {
  if (std::isfinite(x) && std::fabs(x) < 1e15 && x == std::floor(x)) {
    return std::to_string(static_cast<std::int64_t>(x));
  }
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Timestamps

namespace detail {

inline bool read_digits(std::string_view s, std::size_t& pos, std::size_t count, int& out) {
  if (pos + count > s.size()) return false;
  int v = 0;
  for (std::size_t i = 0; i < count; ++i) {
    char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  pos += count;
  return true;
}

inline bool expect(std::string_view s, std::size_t& pos, char c) {
  if (pos < s.size() && s[pos] == c) {
    ++pos;
    return true;
  }
  return false;
}

}  // namespace detail

/// Parses `YYYY-MM-DD[T| ]HH:MM:SS[.fff][Z|+HH:MM|-HH:MM]` (or a bare date) into UTC.
inline std::optional<Timestamp> parse_timestamp(std::string_view s) {
  using namespace std::chrono;
  std::size_t pos = 0;
  int y, mo, d, h = 0, mi = 0, sec = 0, ms = 0;
  if (!detail::read_digits(s, pos, 4, y) || !detail::expect(s, pos, '-') ||
      !detail::read_digits(s, pos, 2, mo) || !detail::expect(s, pos, '-') ||
      !detail::read_digits(s, pos, 2, d)) {
    return std::nullopt;
  }
  if (pos < s.size()) {
    if (s[pos] != 'T' && s[pos] != ' ') return std::nullopt;
    ++pos;
    if (!detail::read_digits(s, pos, 2, h) || !detail::expect(s, pos, ':') ||
        !detail::read_digits(s, pos, 2, mi) || !detail::expect(s, pos, ':') ||
        !detail::read_digits(s, pos, 2, sec)) {
      return std::nullopt;
    }
    if (detail::expect(s, pos, '.')) {
      std::size_t start = pos;
      int scale = 100;
      while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
        ms += (s[pos] - '0') * scale;
        scale /= 10;
        ++pos;
      }
      if (pos == start) return std::nullopt;
    }
  }
  std::int64_t offset_minutes = 0;
  if (pos < s.size()) {
    if (s[pos] == 'Z') {
      ++pos;
    } else if (s[pos] == '+' || s[pos] == '-') {
      int sign = s[pos] == '-' ? -1 : 1;
      ++pos;
      int oh, om;
      if (!detail::read_digits(s, pos, 2, oh) || !detail::expect(s, pos, ':') ||
          !detail::read_digits(s, pos, 2, om)) {
        return std::nullopt;
      }
      offset_minutes = sign * (oh * 60 + om);
    }
  }
  if (pos != s.size()) return std::nullopt;
  if (h > 23 || mi > 59 || sec > 60) return std::nullopt;
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  std::int64_t days = sys_days{ymd}.time_since_epoch().count();
  std::int64_t millis =
      ((days * 24 + h) * 60 + mi - offset_minutes) * 60'000LL + sec * 1000LL + ms;
  if (millis < 0) return std::nullopt;
  return Timestamp{millis};
}

/// `YYYY-MM-DDTHH:MM:SS`, with `.mmm` appended only when the milliseconds are non-zero.
inline std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  std::int64_t ms = t.millis;
  std::int64_t days = ms >= 0 ? ms / 86'400'000 : -((-ms + 86'399'999) / 86'400'000);
  std::int64_t rem = ms - days * 86'400'000;
  year_month_day ymd{sys_days{std::chrono::days{days}}};
  int h = static_cast<int>(rem / 3'600'000);
  int mi = static_cast<int>(rem / 60'000 % 60);
  int s = static_cast<int>(rem / 1000 % 60);
  int frac = static_cast<int>(rem % 1000);
  char buf[40];
  int n = std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                        static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), h, mi, s);
  std::string out(buf, static_cast<std::size_t>(n));
  if (frac != 0) {
    std::snprintf(buf, sizeof buf, ".%03d", frac);
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Textual values

/// Canonical text for a value; parse_value(to_text(v), kind_of(v)) == v.
inline std::string to_text(const AttributeValue& v) {
  switch (kind_of(v)) {
    case ValueKind::Integer: return std::to_string(std::get<std::int64_t>(v));
    case ValueKind::Real: return format_real(std::get<double>(v));
    case ValueKind::Text: return std::get<std::string>(v);
    case ValueKind::Timestamp: return format_timestamp(std::get<Timestamp>(v));
  }
  return {};
}

inline std::optional<std::int64_t> parse_integer(std::string_view s) {
  std::int64_t v{};
  if (s.empty()) return std::nullopt;
  auto first = s.data();
  if (*first == '+') ++first;
  auto res = std::from_chars(first, s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<double> parse_real(std::string_view s) {
  double v{};
  if (s.empty()) return std::nullopt;
  auto first = s.data();
  if (*first == '+') ++first;
  auto res = std::from_chars(first, s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<AttributeValue> parse_value(std::string_view s, ValueKind kind) {
  switch (kind) {
    case ValueKind::Integer:
      if (auto v = parse_integer(s)) return AttributeValue{*v};
      return std::nullopt;
    case ValueKind::Real:
      if (auto v = parse_real(s)) return AttributeValue{*v};
      return std::nullopt;
    case ValueKind::Text: return AttributeValue{std::string(s)};
    case ValueKind::Timestamp:
      if (auto v = parse_timestamp(s)) return AttributeValue{*v};
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace cfx

#endif  // CFX_VALUE_HPP
