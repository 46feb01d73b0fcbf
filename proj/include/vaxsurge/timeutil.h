#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace vaxsurge {

using Instant = std::chrono::sys_seconds;
using Date = std::chrono::sys_days;

// Parses ISO-8601 date-times: "YYYY-MM-DD[T| ]HH:MM[:SS[.fff]][Z|+HH:MM|+HHMM|+HH]".
// A missing offset means UTC. Fractional seconds are truncated.
std::optional<Instant> parse_iso8601(std::string_view text);

// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_utc(Instant t);

// "YYYY-MM-DD"
std::string format_date(Date d);
std::optional<Date> parse_date(std::string_view text);

// Calendar day of `t` shifted by the display offset.
Date local_date(Instant t, int utc_offset_minutes);

}  // namespace vaxsurge
