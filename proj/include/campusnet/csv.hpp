#pragma once

#include <initializer_list>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace campusnet::csv {

/// Line-oriented CSV reader with a mandatory header row. Supports double-quoted
/// fields with "" escapes; embedded newlines are not supported.
class Reader {
 public:
  Reader(std::istream& in, std::string source_name);

  const std::vector<std::string>& header() const { return header_; }
  /// Column index of `name`; throws ParseError naming the missing column.
  std::size_t column(std::string_view name) const;
  /// Throws ParseError unless the header contains every name, in any order.
  void require_columns(std::initializer_list<std::string_view> names) const;

  /// Reads the next non-empty row. Returns false at end of input.
  bool next(std::vector<std::string>& fields);
  std::size_t line() const { return line_; }
  const std::string& source() const { return source_; }

  [[noreturn]] void fail(const std::string& what) const;

 private:
  void split(const std::string& line, std::vector<std::string>& out) const;

  std::istream& in_;
  std::string source_;
  std::vector<std::string> header_;
  std::size_t line_ = 0;
  std::string buffer_;
};

/// Shortest round-trip decimal representation. Deterministic across runs.
std::string format_number(double value);
/// Empty field for an absent value.
std::string format_number(const std::optional<double>& value);

/// Writes one row, quoting fields that contain separators or quotes.
void write_row(std::ostream& out, const std::vector<std::string>& fields);
/// Appends one row (with newline) to a text buffer, quoting like write_row.
void append_row(std::string& out, std::initializer_list<std::string_view> fields);

double parse_double(std::string_view s);
long long parse_int(std::string_view s);
bool parse_bool(std::string_view s);

}  // namespace campusnet::csv
