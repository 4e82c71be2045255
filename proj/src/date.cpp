#include "campusnet/date.hpp"

#include <charconv>
#include <cstdio>
#include <chrono>
#include <stdexcept>

namespace campusnet {

namespace {

int parse_fixed(std::string_view s, std::size_t pos, std::size_t len) {
  int value = 0;
  auto first = s.data() + pos;
  auto last = first + len;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw std::invalid_argument("invalid date '" + std::string(s) + "'");
  }
  return value;
}

}  // namespace

Day parse_date(std::string_view iso) {
  using namespace std::chrono;
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') {
    throw std::invalid_argument("invalid date '" + std::string(iso) + "', expected YYYY-MM-DD");
  }
  int y = parse_fixed(iso, 0, 4);
  int m = parse_fixed(iso, 5, 2);
  int d = parse_fixed(iso, 8, 2);
  year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) {
    throw std::invalid_argument("invalid date '" + std::string(iso) + "'");
  }
  return static_cast<Day>(sys_days{ymd}.time_since_epoch().count());
}

std::string format_date(Day d) {
  using namespace std::chrono;
  year_month_day ymd{sys_days{days{d}}};
  char buf[16];
  int y = static_cast<int>(ymd.year());
  unsigned m = static_cast<unsigned>(ymd.month());
  unsigned dd = static_cast<unsigned>(ymd.day());
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", y, m, dd);
  return buf;
}

int month_ordinal(Day d) {
  using namespace std::chrono;
  year_month_day ymd{sys_days{days{d}}};
  return static_cast<int>(ymd.year()) * 12 + static_cast<int>(static_cast<unsigned>(ymd.month())) - 1;
}

Day first_day_of_month(int ordinal) {
  using namespace std::chrono;
  int y = ordinal >= 0 ? ordinal / 12 : (ordinal - 11) / 12;
  int m = ordinal - y * 12 + 1;
  year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{1}};
  return static_cast<Day>(sys_days{ymd}.time_since_epoch().count());
}

double years_between(Day from, Day to) { return static_cast<double>(to - from) / 365.25; }

}  // namespace campusnet
