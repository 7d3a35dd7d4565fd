#pragma once

#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace conres {

/// Dense node handle; the index into a ContactPlan's (id-sorted) node table.
using NodeIndex = std::uint32_t;

inline constexpr NodeIndex kNoNode = std::numeric_limits<NodeIndex>::max();

enum class NodeKind : std::uint8_t { satellite, cell };

inline std::string_view to_string(NodeKind k) {
  return k == NodeKind::satellite ? "satellite" : "cell";
}

// ---------------------------------------------------------------------------
// Errors. Each family maps onto one CLI exit code.

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad configuration or usage (exit code 1).
struct ConfigError : Error {
  ConfigError(std::string_view field, std::string_view what)
      : Error(std::string(field) + ": " + std::string(what)), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Malformed input data (exit code 2).
struct ParseError : Error {
  ParseError(std::size_t line, std::string_view what)
      : Error("line " + std::to_string(line) + ": " + std::string(what)), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Unknown node kind or structurally wrong document (exit code 2).
struct SchemaError : Error {
  using Error::Error;
};

/// Well-formed data violating a model invariant (exit code 2).
struct ValidationError : Error {
  using Error::Error;
};

/// Precondition violated by the caller (exit code 2 at the CLI boundary).
struct ArgumentError : Error {
  using Error::Error;
};

/// Filesystem failure (exit code 3).
struct IoError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------

/// Propagation delay in integer microseconds.
///
/// Integer storage keeps path sums exact, so equal-delay ties are detected
/// exactly and the deterministic tie-break is well defined.
class Delay {
 public:
  using rep = std::int64_t;

  constexpr Delay() = default;
  static constexpr Delay from_us(rep us) { return Delay(us); }
  /// Rounds to the nearest microsecond.
  static Delay from_ms(double ms) { return Delay(static_cast<rep>(std::llround(ms * 1000.0))); }
  static constexpr Delay infinite() { return Delay(std::numeric_limits<rep>::max()); }

  constexpr rep us() const { return us_; }
  constexpr double ms() const { return static_cast<double>(us_) / 1000.0; }
  constexpr bool is_infinite() const { return us_ == std::numeric_limits<rep>::max(); }

  constexpr Delay& operator+=(Delay o) {
    if (is_infinite() || o.is_infinite() || us_ > std::numeric_limits<rep>::max() - o.us_)
      us_ = std::numeric_limits<rep>::max();
    else
      us_ += o.us_;
    return *this;
  }
  friend constexpr Delay operator+(Delay a, Delay b) { return a += b; }
  friend constexpr auto operator<=>(Delay, Delay) = default;

 private:
  constexpr explicit Delay(rep us) : us_(us) {}
  rep us_ = 0;
};

/// "12.345" style rendering with exactly three decimals.
inline std::string format_ms(Delay d) {
  if (d.is_infinite()) return "inf";
  const Delay::rep us = d.us();
  const Delay::rep mag = us < 0 ? -us : us;
  std::string out = us < 0 ? "-" : "";
  out += std::to_string(mag / 1000);
  out += '.';
  std::string frac = std::to_string(mag % 1000);
  out.append(3 - frac.size(), '0');
  out += frac;
  return out;
}

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw Error("format_double: conversion failed");
  return std::string(buf, ptr);
}

/// Fixed-decimal rendering (used for percentages and report values).
inline std::string format_fixed(double v, int decimals) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, decimals);
  if (ec != std::errc{}) throw Error("format_fixed: conversion failed");
  std::string s(buf, ptr);
  if (s.starts_with('-') && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

/// Strict full-field double parse; nullopt-style failure is reported via bool.
inline bool parse_double(std::string_view text, double& out) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size() && std::isfinite(out);
}

}  // namespace conres
