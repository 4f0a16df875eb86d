#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace swarmloc {

/// Header row plus string cells. Cells containing a comma, quote or newline
/// are quoted on output with embedded quotes doubled.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws ParseError if absent.
  std::size_t column(const std::string& name) const;
};

void write_csv(std::ostream& out, const CsvTable& table);

/// Parses what write_csv emits. Throws ParseError on unbalanced quotes or a
/// row whose width differs from the header.
CsvTable read_csv(std::istream& in);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

}  // namespace swarmloc
