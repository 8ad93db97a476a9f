#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace alphacir {

using CsvValue = std::variant<std::string, double, long>;
using CsvRow = std::vector<CsvValue>;

// 17 significant digits round-trips any double exactly.
inline std::string format_double17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_escape(const std::string& s) {
  bool needs_quote = false;
  for (char c : s) {
    if (c == ',' || c == '"' || c == '\n' || c == '\r') {
      needs_quote = true;
      break;
    }
  }
  if (!needs_quote) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// RFC-4180-style CSV: header row, LF line endings, doubles at 17
// significant digits, rows written in the order given.
inline void emit_csv(const std::vector<std::string>& header,
                     const std::vector<CsvRow>& rows,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(header[i]);
  }
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw std::invalid_argument("csv row does not match schema width");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      if (std::holds_alternative<std::string>(row[i]))
        out << csv_escape(std::get<std::string>(row[i]));
      else if (std::holds_alternative<double>(row[i]))
        out << format_double17(std::get<double>(row[i]));
      else
        out << std::get<long>(row[i]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace alphacir
