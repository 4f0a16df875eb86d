#include "swarmloc/csv.hpp"

#include <charconv>
#include <istream>
#include <ostream>

#include "swarmloc/errors.hpp"

namespace swarmloc {

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == name) return c;
  throw ParseError("missing CSV column '" + name + "'", 1);
}

namespace {

void write_cell(std::ostream& out, const std::string& cell) {
  if (cell.find_first_of(",\"\n\r") == std::string::npos) {
    out << cell;
    return;
  }
  out << '"';
  for (char ch : cell) {
    if (ch == '"') out << '"';
    out << ch;
  }
  out << '"';
}

void write_row(std::ostream& out, const std::vector<std::string>& row) {
  for (std::size_t c = 0; c < row.size(); ++c) {
    if (c) out << ',';
    write_cell(out, row[c]);
  }
  out << '\n';
}

// Reads one logical record; returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& cells, std::size_t& line) {
  cells.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  ++line;
  const std::size_t start = line;
  std::string cell;
  bool quoted = false;
  char ch;
  while (in.get(ch)) {
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          cell += '"';
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line;
        cell += ch;
      }
      continue;
    }
    if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (ch == '\n') {
      break;
    } else if (ch != '\r') {
      cell += ch;
    }
  }
  if (quoted) throw ParseError("unterminated quoted CSV cell", start);
  cells.push_back(std::move(cell));
  return true;
}

}  // namespace

void write_csv(std::ostream& out, const CsvTable& table) {
  write_row(out, table.header);
  for (const auto& row : table.rows) write_row(out, row);
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::size_t line = 0;
  if (!read_record(in, t.header, line)) throw ParseError("empty CSV input", 1);
  std::vector<std::string> cells;
  while (read_record(in, cells, line)) {
    if (cells.size() == 1 && cells[0].empty()) continue;
    if (cells.size() != t.header.size()) {
      throw ParseError("CSV row has " + std::to_string(cells.size()) + " cells, header has " +
                           std::to_string(t.header.size()),
                       line);
    }
    t.rows.push_back(cells);
  }
  return t;
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace swarmloc
