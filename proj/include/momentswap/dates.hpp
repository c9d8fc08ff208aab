#pragma once

#include <charconv>
#include <chrono>
#include <cstdio>
#include <string>
#include <string_view>

#include "momentswap/error.hpp"

namespace momentswap {

using Date = std::chrono::sys_days;

inline Date make_date(int y, unsigned m, unsigned d) {
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) throw ValidationError("invalid calendar date");
  return Date{ymd};
}

// Accepts ISO "yyyy-mm-dd" and the compact "yyyymmdd" used by factor files.
inline Date parse_date(std::string_view s) {
  auto num = [&](std::string_view part) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc{} || ptr != part.data() + part.size())
      throw ValidationError("malformed date '" + std::string(s) + "'");
    return v;
  };
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s.size() == 10 && s[4] == '-' && s[7] == '-')
    return make_date(num(s.substr(0, 4)), num(s.substr(5, 2)), num(s.substr(8, 2)));
  if (s.size() == 8)
    return make_date(num(s.substr(0, 4)), num(s.substr(4, 2)), num(s.substr(6, 2)));
  throw ValidationError("malformed date '" + std::string(s) + "'");
}

inline std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                unsigned(ymd.day()));
  return buf;
}

// Calendar days from `from` to `to`: exclusive of `from`, inclusive of `to`.
inline long days_between(Date from, Date to) { return (to - from).count(); }

inline Date add_days(Date d, long n) { return d + std::chrono::days{n}; }

inline bool is_weekday(Date d) {
  const std::chrono::weekday wd{d};
  return wd != std::chrono::Saturday && wd != std::chrono::Sunday;
}

constexpr double kDaysPerYear = 365.0;

inline double year_fraction(Date from, Date to) {
  return static_cast<double>(days_between(from, to)) / kDaysPerYear;
}

}  // namespace momentswap
