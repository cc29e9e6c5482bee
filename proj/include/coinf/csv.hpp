#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "coinf/error.hpp"
#include "coinf/util.hpp"

namespace coinf {

// Minimal CSV support for the flat tables this project reads and writes.
// First row is the header. Cells containing commas, quotes or newlines are
// quoted RFC-4180 style (param_json cells need this). Blank lines and lines
// starting with '#' are skipped on read.

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

namespace detail {

// Parses one record starting at `pos`; advances `pos` past the trailing
// newline. Quoted cells may contain commas and escaped quotes ("").
inline std::vector<std::string> read_csv_record(std::string_view text, size_t& pos,
                                                size_t lineno) {
  std::vector<std::string> out;
  std::string cell;
  bool in_quotes = false;
  bool cell_was_quoted = false;
  while (pos < text.size()) {
    char c = text[pos];
    if (in_quotes) {
      if (c == '"') {
        if (pos + 1 < text.size() && text[pos + 1] == '"') {
          cell += '"';
          ++pos;
        } else {
          in_quotes = false;
        }
      } else {
        cell += c;
      }
      ++pos;
      continue;
    }
    if (c == '"' && cell.empty() && !cell_was_quoted) {
      in_quotes = true;
      cell_was_quoted = true;
      ++pos;
      continue;
    }
    if (c == ',') {
      out.push_back(std::move(cell));
      cell.clear();
      cell_was_quoted = false;
      ++pos;
      continue;
    }
    if (c == '\n') {
      ++pos;
      break;
    }
    if (c == '\r' && pos + 1 < text.size() && text[pos + 1] == '\n') {
      pos += 2;
      break;
    }
    cell += c;
    ++pos;
  }
  if (in_quotes) throw ParseError("line " + std::to_string(lineno) + ": unterminated quote");
  out.push_back(std::move(cell));
  return out;
}

}  // namespace detail

inline CsvTable parse_csv(std::string_view text, const std::vector<std::string>& expect_header) {
  CsvTable t;
  size_t pos = 0;
  size_t lineno = 0;
  while (pos < text.size()) {
    ++lineno;
    // peek for comment/blank lines (never quoted)
    if (text[pos] == '\n') {
      ++pos;
      continue;
    }
    if (text[pos] == '#') {
      size_t nl = text.find('\n', pos);
      pos = (nl == std::string_view::npos) ? text.size() : nl + 1;
      continue;
    }
    auto cells = detail::read_csv_record(text, pos, lineno);
    if (cells.size() == 1 && cells[0].empty()) continue;
    if (t.header.empty()) {
      t.header = std::move(cells);
      if (!expect_header.empty() && t.header != expect_header) {
        std::string want;
        for (const auto& h : expect_header) {
          if (!want.empty()) want += ',';
          want += h;
        }
        throw ParseError("line " + std::to_string(lineno) + ": expected header '" + want + "'");
      }
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw ParseError("line " + std::to_string(lineno) + ": expected " +
                       std::to_string(t.header.size()) + " cells, got " +
                       std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw ParseError("empty csv input");
  return t;
}

inline std::string csv_escape(const std::string& cell) {
  if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

inline std::string emit_csv(const CsvTable& t) {
  std::string out;
  auto emit_row = [&out](const std::vector<std::string>& row) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += csv_escape(row[i]);
    }
    out += '\n';
  };
  emit_row(t.header);
  for (const auto& row : t.rows) emit_row(row);
  return out;
}

inline double csv_double(const std::vector<std::string>& row, size_t col, size_t rowno) {
  double v = 0;
  if (!parse_double(row[col], v)) {
    throw ParseError("row " + std::to_string(rowno) + ": '" + row[col] + "' is not a number");
  }
  return v;
}

}  // namespace coinf
