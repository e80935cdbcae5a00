// Copyright 2026 The gibbs-dnls Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace gibbs {

/// A rectangular result table. Cells are numbers or strings; the column order
/// is fixed by the producer and is part of the output contract.
struct Table {
  using Cell = std::variant<double, long long, std::string>;

  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row) { rows.push_back(std::move(row)); }
};

/// Shortest round-trip decimal form; non-finite values print as nan/inf/-inf.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string format_cell(const Table::Cell& cell) {
  if (const auto* d = std::get_if<double>(&cell)) return format_number(*d);
  if (const auto* i = std::get_if<long long>(&cell)) return std::to_string(*i);
  const auto& s = std::get<std::string>(cell);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + '"';
}

/// RFC 4180 style CSV with a header line; every line ends with '\n'.
inline std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out += ',';
    out += table.columns[c];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += format_cell(row[c]);
    }
    out += '\n';
  }
  return out;
}

/// JSON encodes non-finite numbers as strings so the document stays valid.
inline nlohmann::json number_json(double x) {
  if (std::isfinite(x)) return x;
  return format_number(x);
}

inline void to_json(nlohmann::json& j, const Table& table) {
  j = nlohmann::json{{"name", table.name}, {"columns", table.columns}, {"rows", nlohmann::json::array()}};
  for (const auto& row : table.rows) {
    auto r = nlohmann::json::array();
    for (const auto& cell : row) {
      if (const auto* d = std::get_if<double>(&cell)) {
        r.push_back(number_json(*d));
      } else if (const auto* i = std::get_if<long long>(&cell)) {
        r.push_back(*i);
      } else {
        r.push_back(std::get<std::string>(cell));
      }
    }
    j["rows"].push_back(std::move(r));
  }
}

}  // namespace gibbs
