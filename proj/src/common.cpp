#include "campusnet/common.hpp"

namespace campusnet {

std::string_view to_string(Scope s) { return s == Scope::Cohort ? "cohort" : "school"; }

std::string_view to_string(TimeUnit u) { return u == TimeUnit::Week ? "week" : "month"; }

std::string_view to_string(Dimension d) {
  switch (d) {
    case Dimension::Gender: return "gender";
    case Dimension::EntryYear: return "entry_year";
    case Dimension::Major: return "major";
    case Dimension::Hometown: return "hometown";
  }
  return "?";
}

Scope parse_scope(std::string_view s) {
  if (s == "cohort") return Scope::Cohort;
  if (s == "school") return Scope::School;
  throw std::invalid_argument("unknown scope '" + std::string(s) + "' (expected cohort|school)");
}

TimeUnit parse_time_unit(std::string_view s) {
  if (s == "week") return TimeUnit::Week;
  if (s == "month") return TimeUnit::Month;
  throw std::invalid_argument("unknown time unit '" + std::string(s) + "' (expected week|month)");
}

Dimension parse_dimension(std::string_view s) {
  for (Dimension d : kAllDimensions) {
    if (to_string(d) == s) return d;
  }
  throw std::invalid_argument("unknown dimension '" + std::string(s) + "'");
}

}  // namespace campusnet
