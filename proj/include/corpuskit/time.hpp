#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace corpuskit {

using UtcTime = std::chrono::sys_seconds;
using Seconds = std::chrono::seconds;

/// Half-open interval [start, end) of UTC instants.
struct Interval {
  UtcTime start{};
  UtcTime end{};

  bool contains(UtcTime t) const { return start <= t && t < end; }
  bool valid() const { return start < end; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Parses the canonical "2014-03-19T11:08:00Z" form. Offsets, fractional
/// seconds and lowercase separators are rejected.
std::optional<UtcTime> parse_utc(std::string_view text);

/// Throws ConfigError naming `field` when `text` is not a canonical timestamp.
UtcTime parse_utc_field(std::string_view text, std::string_view field);

std::string format_utc(UtcTime t);

/// True when format_utc(t) yields a four-digit year that parse_utc accepts.
bool canonical_representable(UtcTime t);

}  // namespace corpuskit
