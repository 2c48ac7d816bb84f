#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mobstat::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  // 1-based source line of each row

  /// Index of a header column; throws SchemaError naming it when absent.
  std::size_t column(std::string_view name) const;
};

/// Comma-delimited, double-quote escaping ("" inside quotes). Blank lines are
/// skipped. The first record is the header; an empty input throws SchemaError.
Table parse(std::string_view text);

std::string escape(std::string_view field);

double to_double(std::string_view field);
std::int64_t to_int(std::string_view field);
/// Shortest representation that parses back to the same double.
std::string format_double(double value);

}  // namespace mobstat::csv
