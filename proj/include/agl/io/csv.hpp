#pragma once

// Delimiter-separated numeric tables.

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "agl/core_net.hpp"
#include "agl/error.hpp"

namespace agl::io {

enum class HeaderMode { detect, present, absent };

struct TabularFile {
  std::vector<std::string> header;  // empty when the file has none
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row

  std::size_t columns() const {
    return rows.empty() ? header.size() : rows.front().size();
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> parse_number(std::string_view cell) {
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
  return v;
}

}  // namespace detail

/// Reads a rectangular numeric table. With HeaderMode::detect the first
/// non-blank line is a header iff any of its cells is not a number. Blank
/// lines are skipped.
inline TabularFile read_table(std::istream& in, char delimiter,
                              HeaderMode header = HeaderMode::detect) {
  TabularFile table;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line, delimiter);
    if (first) {
      first = false;
      width = cells.size();
      bool numeric = true;
      for (auto c : cells) numeric = numeric && detail::parse_number(c).has_value();
      const bool is_header =
          header == HeaderMode::present || (header == HeaderMode::detect && !numeric);
      if (is_header) {
        for (auto c : cells) table.header.emplace_back(c);
        continue;
      }
    }
    if (cells.size() != width)
      throw ParseError("expected " + std::to_string(width) + " fields, found " +
                           std::to_string(cells.size()),
                       line_no);
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto v = detail::parse_number(cells[c]);
      if (!v || !std::isfinite(*v))
        throw ParseError("field " + std::to_string(c + 1) + " is not a finite number: '" +
                             std::string(cells[c]) + "'",
                         line_no);
      row.push_back(*v);
    }
    table.rows.push_back(std::move(row));
    table.line_numbers.push_back(line_no);
  }
  if (table.rows.empty()) throw ParseError("table has no data rows", line_no);
  return table;
}

struct LoadedData {
  Dataset data;
  std::vector<std::string> feature_names;  // from the header, if any
};

/// Splits a table into inputs and a target column (negative index counts
/// from the end; -1 is the last column).
inline LoadedData to_dataset(const TabularFile& table, int target_column, Task task) {
  const auto width = static_cast<int>(table.columns());
  const int target = target_column < 0 ? width + target_column : target_column;
  agl::detail::require(width >= 2, "table needs at least one feature and a target column");
  agl::detail::require(target >= 0 && target < width, "target column out of range");

  LoadedData out;
  std::vector<double> x, y;
  x.reserve(table.rows.size() * static_cast<std::size_t>(width - 1));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const double t = row[static_cast<std::size_t>(target)];
    if (task == Task::binary && t != 0.0 && t != 1.0)
      throw ParseError("binary target must be 0 or 1, found " + std::to_string(t),
                       table.line_numbers[r]);
    y.push_back(t);
    for (int c = 0; c < width; ++c)
      if (c != target) x.push_back(row[static_cast<std::size_t>(c)]);
  }
  if (!table.header.empty())
    for (int c = 0; c < width; ++c)
      if (c != target) out.feature_names.push_back(table.header[static_cast<std::size_t>(c)]);
  out.data = Dataset(static_cast<std::size_t>(width - 1), std::move(x), std::move(y), task);
  return out;
}

inline LoadedData load_table(const std::string& path, char delimiter, int target_column,
                             Task task, HeaderMode header = HeaderMode::detect) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return to_dataset(read_table(in, delimiter, header), target_column, task);
}

inline Dataset load_csv(const std::string& path, char delimiter, int target_column, Task task,
                        HeaderMode header = HeaderMode::detect) {
  return load_table(path, delimiter, target_column, task, header).data;
}

/// One name per non-blank line.
inline std::vector<std::string> load_names(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = detail::trim(line);
    if (!t.empty()) names.emplace_back(t);
  }
  return names;
}

}  // namespace agl::io
