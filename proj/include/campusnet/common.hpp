#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace campusnet {

/// Dense node identifier, contiguous 0..N-1 within one loaded dataset.
using NodeId = std::uint32_t;

/// Day resolution timestamp: days since 1970-01-01.
using Day = std::int32_t;

/// Category code used for unknown / undeclared attribute values.
inline constexpr std::int32_t kUnknown = -1;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input row. Carries the source name and 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what),
        source_(std::move(source)),
        line_(line) {}

  const std::string& source() const { return source_; }
  std::size_t line() const { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

/// Referential problems in a loaded bundle (missing attribute record, unknown cohort).
class DataError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

enum class Scope { Cohort, School };
enum class TimeUnit { Week, Month };
enum class Dimension { Gender, EntryYear, Major, Hometown };

inline constexpr Dimension kAllDimensions[] = {Dimension::Gender, Dimension::EntryYear,
                                               Dimension::Major, Dimension::Hometown};

std::string_view to_string(Scope s);
std::string_view to_string(TimeUnit u);
std::string_view to_string(Dimension d);

Scope parse_scope(std::string_view s);
TimeUnit parse_time_unit(std::string_view s);
Dimension parse_dimension(std::string_view s);

}  // namespace campusnet
