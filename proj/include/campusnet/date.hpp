#pragma once

#include <string>
#include <string_view>

#include "campusnet/common.hpp"

namespace campusnet {

/// Parses an ISO-8601 calendar date (YYYY-MM-DD). Throws std::invalid_argument.
Day parse_date(std::string_view iso);
std::string format_date(Day day);

/// Absolute month count (year * 12 + month - 1) of the calendar month containing `day`.
int month_ordinal(Day day);
Day first_day_of_month(int month_ordinal);

/// Fractional years between two days (365.25-day years).
double years_between(Day from, Day to);

}  // namespace campusnet
