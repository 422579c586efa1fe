#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tgf/common.hpp"

namespace tgf {

/// Read-only row-major view of a numeric matrix.
struct MatrixView {
  std::span<const double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::span<const double> row(std::size_t i) const { return data.subspan(i * cols, cols); }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

/// A labeled (or unlabeled) feature table: one row per stream link.
struct Dataset {
  std::vector<std::string> columns;
  std::vector<double> values;        // rows x columns, row-major
  std::vector<std::uint64_t> index;  // stream position of each row
  std::vector<std::uint8_t> labels;  // empty when unlabeled

  std::size_t rows() const { return index.size(); }
  std::size_t cols() const { return columns.size(); }
  bool labeled() const { return !labels.empty(); }
  MatrixView view() const { return {values, rows(), cols()}; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values).subspan(i * cols(), cols());
  }

  std::size_t column_index(std::string_view name) const {
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (columns[j] == name) return j;
    }
    throw UsageError("unknown feature column '" + std::string(name) + "'");
  }

  /// Copies the given rows, in the given order, into a new dataset.
  Dataset select(std::span<const std::size_t> rows_to_keep) const {
    Dataset out;
    out.columns = columns;
    out.values.reserve(rows_to_keep.size() * cols());
    out.index.reserve(rows_to_keep.size());
    for (auto r : rows_to_keep) {
      auto src = row(r);
      out.values.insert(out.values.end(), src.begin(), src.end());
      out.index.push_back(index[r]);
      if (labeled()) out.labels.push_back(labels[r]);
    }
    return out;
  }

  Dataset slice(std::size_t begin, std::size_t end) const {
    std::vector<std::size_t> ids(end - begin);
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = begin + i;
    return select(ids);
  }
};

/// Formats a number the way feature CSVs store it: integral values without a
/// fractional part or exponent, everything else in shortest round-trip form.
inline void append_number(std::string& out, double v) {
  char buf[64];
  std::to_chars_result res;
  if (v == std::floor(v) && std::fabs(v) < 9.007199254740992e15) {
    res = std::to_chars(buf, buf + sizeof buf, static_cast<std::int64_t>(v));
  } else {
    res = std::to_chars(buf, buf + sizeof buf, v);
  }
  out.append(buf, res.ptr);
}

inline void write_csv_header(std::ostream& os, std::span<const std::string> columns, bool labeled) {
  std::string line = "index";
  for (const auto& c : columns) {
    line += ',';
    line += c;
  }
  if (labeled) line += ",label";
  line += '\n';
  os << line;
}

inline void write_csv_row(std::ostream& os, std::uint64_t index, std::span<const double> values,
                          const std::uint8_t* label) {
  std::string line = std::to_string(index);
  for (double v : values) {
    line += ',';
    append_number(line, v);
  }
  if (label) {
    line += ',';
    line += static_cast<char>('0' + *label);
  }
  line += '\n';
  os << line;
}

inline void write_csv(std::ostream& os, const Dataset& d) {
  write_csv_header(os, d.columns, d.labeled());
  for (std::size_t i = 0; i < d.rows(); ++i) {
    write_csv_row(os, d.index[i], d.row(i), d.labeled() ? &d.labels[i] : nullptr);
  }
}

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// Reads a feature CSV. An "index" first column and a "label" last column are
/// recognized by name; every other column is a numeric feature.
inline Dataset read_csv(std::istream& is) {
  Dataset d;
  std::string line;
  if (!std::getline(is, line)) throw DataError("feature CSV: missing header");
  auto header = detail::split_commas(detail::trim_cr(line));
  const bool has_index = !header.empty() && header.front() == "index";
  const bool has_label = header.size() > (has_index ? 1u : 0u) && header.back() == "label";
  const std::size_t first = has_index ? 1 : 0;
  const std::size_t last = header.size() - (has_label ? 1 : 0);
  for (std::size_t j = first; j < last; ++j) d.columns.emplace_back(header[j]);

  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    auto text = detail::trim_cr(line);
    if (text.empty()) continue;
    auto cells = detail::split_commas(text);
    if (cells.size() != header.size()) {
      throw DataError("feature CSV line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " cells, got " + std::to_string(cells.size()));
    }
    auto bad = [&](std::string_view what) {
      return DataError("feature CSV line " + std::to_string(line_no) + ": bad " + std::string(what));
    };
    if (has_index) {
      std::uint64_t idx = 0;
      auto [p, ec] = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), idx);
      if (ec != std::errc() || p != cells[0].data() + cells[0].size()) throw bad("index");
      d.index.push_back(idx);
    } else {
      d.index.push_back(d.index.size());
    }
    for (std::size_t j = first; j < last; ++j) {
      double v = 0;
      auto [p, ec] = std::from_chars(cells[j].data(), cells[j].data() + cells[j].size(), v);
      if (ec != std::errc() || p != cells[j].data() + cells[j].size()) throw bad("value");
      d.values.push_back(v);
    }
    if (has_label) {
      const auto& c = cells.back();
      if (c != "0" && c != "1") throw bad("label");
      d.labels.push_back(c == "1" ? 1 : 0);
    }
  }
  return d;
}

}  // namespace tgf
