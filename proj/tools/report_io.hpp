#pragma once

// Tabular output for the command-line tool: every command produces a Table,
// rendered either as CSV (12 significant digits, "inf" for infinities, empty
// cell for absent values) or as JSON ({"command", "rows", optional "summary"},
// infinities and absent values as null).

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace aloha::io {

using Json = nlohmann::ordered_json;

using Cell = std::variant<std::monostate, double, std::int64_t, std::string, bool>;

inline Cell cell(std::optional<double> v) { return v ? Cell{*v} : Cell{}; }

struct Table {
  std::string command;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  Json summary;  // null when there is nothing beyond the rows

  void add_row(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw std::logic_error("row width does not match the header");
    rows.push_back(std::move(row));
  }
};

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string format_cell(const Cell& c) {
  struct Visitor {
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(double v) const { return format_number(v); }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(const std::string& v) const { return csv_escape(v); }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
  };
  return std::visit(Visitor{}, c);
}

inline Json to_json(const Cell& c) {
  struct Visitor {
    Json operator()(std::monostate) const { return nullptr; }
    Json operator()(double v) const { return std::isfinite(v) ? Json(v) : Json(nullptr); }
    Json operator()(std::int64_t v) const { return v; }
    Json operator()(const std::string& v) const { return v; }
    Json operator()(bool v) const { return v; }
  };
  return std::visit(Visitor{}, c);
}

inline std::string render_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_cell(row[i]);
    out += '\n';
  }
  return out;
}

inline Json table_json(const Table& t) {
  Json doc;
  doc["command"] = t.command;
  Json rows = Json::array();
  for (const auto& row : t.rows) {
    Json obj = Json::object();
    for (std::size_t i = 0; i < row.size(); ++i) obj[t.columns[i]] = to_json(row[i]);
    rows.push_back(std::move(obj));
  }
  doc["rows"] = std::move(rows);
  if (!t.summary.is_null()) doc["summary"] = t.summary;
  return doc;
}

inline std::string render_json(const Table& t) { return table_json(t).dump(2) + "\n"; }

enum class Format { Csv, Json };

inline std::string render(const Table& t, Format f) { return f == Format::Csv ? render_csv(t) : render_json(t); }

/// Structural problems of a JSON document against the expected columns;
/// empty when the document conforms.
inline std::vector<std::string> schema_errors(const Json& doc, const std::string& command,
                                              const std::vector<std::string>& columns) {
  std::vector<std::string> errs;
  if (!doc.is_object()) return {"document is not an object"};
  if (!doc.contains("command") || !doc["command"].is_string()) {
    errs.push_back("missing string field 'command'");
  } else if (doc["command"] != command) {
    errs.push_back("command is " + doc["command"].get<std::string>() + ", expected " + command);
  }
  if (!doc.contains("rows") || !doc["rows"].is_array()) {
    errs.push_back("missing array field 'rows'");
    return errs;
  }
  for (std::size_t r = 0; r < doc["rows"].size(); ++r) {
    const Json& row = doc["rows"][r];
    const std::string where = "rows[" + std::to_string(r) + "]";
    if (!row.is_object()) {
      errs.push_back(where + " is not an object");
      continue;
    }
    if (row.size() != columns.size()) errs.push_back(where + " has " + std::to_string(row.size()) + " fields");
    std::size_t i = 0;
    for (auto it = row.begin(); it != row.end(); ++it, ++i) {
      if (i < columns.size() && it.key() != columns[i]) {
        errs.push_back(where + ": field " + std::to_string(i) + " is '" + it.key() + "', expected '" + columns[i] + "'");
      }
      const Json& v = it.value();
      if (!(v.is_number() || v.is_string() || v.is_boolean() || v.is_null())) {
        errs.push_back(where + "." + it.key() + " is not a scalar");
      }
    }
  }
  for (const auto& [key, _] : doc.items()) {
    if (key != "command" && key != "rows" && key != "summary") errs.push_back("unexpected field '" + key + "'");
  }
  if (doc.contains("summary") && !doc["summary"].is_object()) errs.push_back("'summary' is not an object");
  return errs;
}

/// Writes text to path, or to stdout when path is empty.
inline void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing: " + std::strerror(errno));
  out << text;
  out.close();
  if (!out) throw std::runtime_error("error writing " + path);
}

}  // namespace aloha::io
