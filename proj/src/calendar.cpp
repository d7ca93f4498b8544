#include "calendar.hpp"

#include <chrono>
#include <cstdio>

#include "error.hpp"

namespace trackersync {

namespace {
using std::chrono::days;
using std::chrono::floor;
using std::chrono::seconds;
using std::chrono::sys_days;
using std::chrono::sys_seconds;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}
}  // namespace

std::string utc_date(std::int64_t unix_seconds) {
  const sys_days day = floor<days>(sys_seconds{seconds{unix_seconds}});
  const std::chrono::year_month_day ymd{day};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string utc_date_time(std::int64_t unix_seconds) {
  const std::int64_t secs = unix_seconds - utc_day_start(unix_seconds);
  char buf[16];
  std::snprintf(buf, sizeof buf, " %02d:%02d:%02d", static_cast<int>(secs / 3600),
                static_cast<int>(secs / 60 % 60), static_cast<int>(secs % 60));
  return utc_date(unix_seconds) + buf;
}

std::int64_t parse_utc_date(std::string_view text) {
  int y = 0;
  unsigned m = 0, d = 0;
  char tail = 0;
  const std::string s(text);
  if (s.size() != 10 || std::sscanf(s.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) {
    throw Error(Errc::InvalidArgument, "date must be YYYY-MM-DD: " + s);
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) throw Error(Errc::InvalidArgument, "no such calendar date: " + s);
  return std::chrono::duration_cast<seconds>(sys_days{ymd}.time_since_epoch()).count();
}

std::int64_t utc_day_start(std::int64_t unix_seconds) {
  return floor_div(unix_seconds, 86400) * 86400;
}

}  // namespace trackersync
