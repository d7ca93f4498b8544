#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace trackersync {

// All conversions are UTC.
std::string utc_date(std::int64_t unix_seconds);       // YYYY-MM-DD
std::string utc_date_time(std::int64_t unix_seconds);  // YYYY-MM-DD HH:MM:SS
// Midnight of the given date. Throws Error(InvalidArgument) on bad format.
std::int64_t parse_utc_date(std::string_view yyyy_mm_dd);
std::int64_t utc_day_start(std::int64_t unix_seconds);

}  // namespace trackersync
