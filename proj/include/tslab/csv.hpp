#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "tslab/errors.hpp"

namespace tslab {

/// CSV cell: monostate renders as an empty field.
using CsvCell =
    std::variant<std::monostate, double, std::int64_t, std::uint64_t, std::string>;
using CsvRow = std::vector<CsvCell>;

namespace detail {

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

inline std::string csv_format(const CsvCell& cell) {
  if (std::holds_alternative<std::monostate>(cell)) return "";
  if (std::holds_alternative<double>(cell)) {
    const double v = std::get<double>(cell);
    if (!std::isfinite(v)) throw SchemaError("emit_csv: non-finite value in row");
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  }
  if (std::holds_alternative<std::int64_t>(cell))
    return std::to_string(std::get<std::int64_t>(cell));
  if (std::holds_alternative<std::uint64_t>(cell))
    return std::to_string(std::get<std::uint64_t>(cell));
  return csv_escape(std::get<std::string>(cell));
}

}  // namespace detail

inline std::string render_csv(const std::vector<CsvRow>& rows,
                              const std::vector<std::string>& schema) {
  if (schema.empty()) throw SchemaError("emit_csv: empty schema");
  std::string out;
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (j) out += ',';
    out += detail::csv_escape(schema[j]);
  }
  out += '\n';
  for (const auto& row : rows) {
    if (row.size() != schema.size())
      throw SchemaError("emit_csv: row width does not match schema");
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      out += detail::csv_format(row[j]);
    }
    out += '\n';
  }
  return out;
}

inline void emit_csv(const std::vector<CsvRow>& rows,
                     const std::vector<std::string>& schema,
                     const std::string& path) {
  const std::string body = render_csv(rows, schema);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("emit_csv: cannot open '" + path + "' for writing");
  out << body;
  if (!out) throw Error("emit_csv: failed writing '" + path + "'");
}

}  // namespace tslab
