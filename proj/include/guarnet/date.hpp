#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace guarnet {

// Calendar date stored as a serial day count (days since 1970-01-01).
// All windowing in the pipeline is date-based; there is no time-of-day.
struct Date {
  std::int32_t serial = 0;

  auto operator<=>(const Date&) const = default;
};

namespace detail {

// Civil-from-days / days-from-civil, Howard Hinnant's algorithms.
constexpr std::int32_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int>(doe) - 719468;
}

struct CivilDate {
  int year;
  unsigned month;
  unsigned day;
};

constexpr CivilDate civil_from_days(std::int32_t z) {
  z += 719468;
  const int era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int y = static_cast<int>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return {y + (m <= 2), m, d};
}

constexpr unsigned last_day_of_month(int y, unsigned m) {
  constexpr unsigned char lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && (y % 4 == 0 && (y % 100 != 0 || y % 400 == 0))) return 29;
  return lengths[m - 1];
}

}  // namespace detail

inline Date make_date(int year, unsigned month, unsigned day) {
  if (month < 1 || month > 12 || day < 1 || day > detail::last_day_of_month(year, month))
    throw std::invalid_argument("invalid calendar date");
  return Date{detail::days_from_civil(year, month, day)};
}

inline int year_of(Date d) { return detail::civil_from_days(d.serial).year; }
inline unsigned month_of(Date d) { return detail::civil_from_days(d.serial).month; }
inline unsigned day_of(Date d) { return detail::civil_from_days(d.serial).day; }

// Month index since year 0, used for month bucketing and offsets.
inline int month_index(Date d) {
  auto c = detail::civil_from_days(d.serial);
  return c.year * 12 + static_cast<int>(c.month) - 1;
}

inline Date first_day_of_month_index(int mi) {
  int y = mi >= 0 ? mi / 12 : (mi - 11) / 12;
  unsigned m = static_cast<unsigned>(mi - y * 12) + 1;
  return make_date(y, m, 1);
}

// Adds whole months, clamping the day to the end of the target month.
inline Date add_months(Date d, int months) {
  auto c = detail::civil_from_days(d.serial);
  int mi = c.year * 12 + static_cast<int>(c.month) - 1 + months;
  int y = mi >= 0 ? mi / 12 : (mi - 11) / 12;
  unsigned m = static_cast<unsigned>(mi - y * 12) + 1;
  unsigned day = c.day;
  unsigned last = detail::last_day_of_month(y, m);
  if (day > last) day = last;
  return Date{detail::days_from_civil(y, m, day)};
}

inline Date add_days(Date d, int days) { return Date{d.serial + days}; }

inline int days_between(Date from, Date to) { return to.serial - from.serial; }

// Fractional month distance; used only for continuous features.
inline double months_between(Date from, Date to) {
  return static_cast<double>(to.serial - from.serial) / 30.4375;
}

// ISO-8601 YYYY-MM-DD.
inline std::string to_string(Date d) {
  auto c = detail::civil_from_days(d.serial);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", c.year, c.month, c.day);
  return buf;
}

inline Date parse_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-')
    throw std::invalid_argument("expected YYYY-MM-DD, got '" + s + "'");
  for (int i : {0, 1, 2, 3, 5, 6, 8, 9})
    if (s[i] < '0' || s[i] > '9')
      throw std::invalid_argument("expected YYYY-MM-DD, got '" + s + "'");
  int y = std::stoi(s.substr(0, 4));
  unsigned m = static_cast<unsigned>(std::stoi(s.substr(5, 2)));
  unsigned d = static_cast<unsigned>(std::stoi(s.substr(8, 2)));
  return make_date(y, m, d);
}

// Calendar quarter (Jan-Mar, Apr-Jun, Jul-Sep, Oct-Dec).
struct Quarter {
  int year = 0;
  int q = 1;  // 1..4

  auto operator<=>(const Quarter&) const = default;
};

inline Quarter quarter_of(Date d) {
  auto c = detail::civil_from_days(d.serial);
  return Quarter{c.year, static_cast<int>((c.month - 1) / 3) + 1};
}

inline Quarter next_quarter(Quarter q, int n = 1) {
  int idx = q.year * 4 + (q.q - 1) + n;
  int y = idx >= 0 ? idx / 4 : (idx - 3) / 4;
  return Quarter{y, idx - y * 4 + 1};
}

inline Date quarter_start(Quarter q) {
  return make_date(q.year, static_cast<unsigned>((q.q - 1) * 3 + 1), 1);
}

// Exclusive end: first day of the next quarter.
inline Date quarter_end(Quarter q) { return quarter_start(next_quarter(q)); }

inline std::string to_string(Quarter q) {
  return std::to_string(q.year) + "Q" + std::to_string(q.q);
}

// Accepts "2013Q1" and "2013-Q1".
inline Quarter parse_quarter(const std::string& s) {
  std::string t = s;
  auto dash = t.find("-Q");
  if (dash != std::string::npos) t = t.substr(0, dash) + "Q" + t.substr(dash + 2);
  auto pos = t.find('Q');
  if (pos == std::string::npos || pos + 2 != t.size())
    throw std::invalid_argument("expected quarter like 2013Q1, got '" + s + "'");
  int y = std::stoi(t.substr(0, pos));
  int q = std::stoi(t.substr(pos + 1));
  if (q < 1 || q > 4) throw std::invalid_argument("quarter out of range in '" + s + "'");
  return Quarter{y, q};
}

}  // namespace guarnet
