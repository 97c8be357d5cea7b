#pragma once

// CSV ingestion: comma separated, '.' decimal point, header row required.
// Column specs may name a header column, the intercept token "(Intercept)",
// or an interaction "a*b" (elementwise product, any number of factors).

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "betachart/errors.hpp"
#include "betachart/fit.hpp"

namespace betachart::io {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;  // column-major
  std::string source;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }

  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == name) return j;
    }
    return std::nullopt;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  constexpr std::string_view kSpace = " \t\r\n";
  const auto b = s.find_first_not_of(kSpace);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(kSpace);
  return s.substr(b, e - b + 1);
}

inline std::string_view unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::optional<double> parse_number(std::string_view cell) {
  cell = unquote(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

}  // namespace detail

/// Parses a whole table; every cell must be a finite number. Data rows are
/// numbered from 1 in error messages (the header is not counted).
inline CsvTable read_table(std::istream& in, std::string source = "<stream>") {
  CsvTable table;
  table.source = std::move(source);
  std::string line;
  if (!std::getline(in, line) || detail::trim(line).empty()) {
    throw DataError(table.source + ": missing header row");
  }
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  for (auto f : detail::split_fields(line)) {
    const auto name = detail::unquote(f);
    if (name.empty()) throw DataError(table.source + ": empty column name in header");
    if (table.find(name)) {
      throw DataError(table.source + ": duplicate column '" + std::string(name) + "'");
    }
    table.header.emplace_back(name);
  }
  table.columns.resize(table.header.size());

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    ++row;
    const auto fields = detail::split_fields(line);
    if (fields.size() != table.header.size()) {
      throw DataError(table.source + ": row " + std::to_string(row) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(table.header.size()));
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const auto v = detail::parse_number(fields[j]);
      if (!v) {
        throw DataError(table.source + ": row " + std::to_string(row) + ", column '" +
                        table.header[j] + "': non-numeric cell '" +
                        std::string(detail::trim(fields[j])) + "'");
      }
      table.columns[j].push_back(*v);
    }
  }
  if (row == 0) throw DataError(table.source + ": no data rows");
  return table;
}

inline CsvTable read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return read_table(in, path);
}

/// Values of one column spec: a header name, "(Intercept)" (all ones) or a
/// product "a*b*...".
inline Eigen::VectorXd column_values(const CsvTable& table, std::string_view spec) {
  const auto n = static_cast<Eigen::Index>(table.rows());
  spec = detail::trim(spec);
  if (spec == kIntercept) return Eigen::VectorXd::Ones(n);
  Eigen::VectorXd out = Eigen::VectorXd::Ones(n);
  std::size_t start = 0;
  for (;;) {
    const auto pos = spec.find('*', start);
    const auto factor = detail::trim(spec.substr(start, pos == std::string_view::npos
                                                            ? std::string_view::npos
                                                            : pos - start));
    const auto j = table.find(factor);
    if (!j) {
      throw DataError(table.source + ": missing column '" + std::string(factor) + "'" +
                      (factor == spec ? std::string() : " in '" + std::string(spec) + "'"));
    }
    out.array() *= Eigen::Map<const Eigen::ArrayXd>(table.columns[*j].data(), n);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline Eigen::MatrixXd design_matrix(const CsvTable& table, const std::vector<std::string>& cols) {
  Eigen::MatrixXd M(static_cast<Eigen::Index>(table.rows()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    M.col(static_cast<Eigen::Index>(j)) = column_values(table, cols[j]);
  }
  return M;
}

/// Compresses [0, 1] into the open interval: (y (n - 1) + 0.5) / n. Not
/// idempotent; apply once.
inline Eigen::VectorXd boundary_adjust(const Eigen::VectorXd& y, std::size_t n) {
  if (n < 2) throw UsageError("boundary_adjust: n must be >= 2");
  const auto nd = static_cast<double>(n);
  return ((y.array() * (nd - 1.0) + 0.5) / nd).matrix();
}

/// Maps data on [a, b] to [0, 1] via (y - a) / (b - a).
inline Eigen::VectorXd rescale_interval(const Eigen::VectorXd& y, double a, double b) {
  if (!(std::isfinite(a) && std::isfinite(b) && b > a)) {
    throw UsageError("rescale_interval: need finite a < b");
  }
  for (Eigen::Index t = 0; t < y.size(); ++t) {
    if (!(y[t] >= a && y[t] <= b)) {
      throw DataError("row " + std::to_string(t + 1) + ": value " + std::to_string(y[t]) +
                      " outside [" + std::to_string(a) + ", " + std::to_string(b) + "]");
    }
  }
  return ((y.array() - a) / (b - a)).matrix();
}

struct IngestOptions {
  bool boundary_adjust = false;
  std::optional<std::pair<double, double>> rescale;  // response range [a, b]
};

/// Builds a Dataset from a table. The response must lie in [0, 1] (after
/// optional rescaling); 0 and 1 are accepted only with boundary_adjust.
inline Dataset to_dataset(const CsvTable& table, const std::string& response_col,
                          const std::vector<std::string>& mean_cols,
                          const std::vector<std::string>& disp_cols,
                          const IngestOptions& opts = {}) {
  const auto j = table.find(response_col);
  if (!j) throw DataError(table.source + ": missing response column '" + response_col + "'");
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(table.columns[*j].data(),
                                                        static_cast<Eigen::Index>(table.rows()));
  if (opts.rescale) y = rescale_interval(y, opts.rescale->first, opts.rescale->second);
  for (Eigen::Index t = 0; t < y.size(); ++t) {
    if (!(y[t] >= 0.0 && y[t] <= 1.0)) {
      throw DataError(table.source + ": row " + std::to_string(t + 1) + ": response " +
                      std::to_string(y[t]) + " outside [0, 1]");
    }
    if (!opts.boundary_adjust && (y[t] == 0.0 || y[t] == 1.0)) {
      throw DataError(table.source + ": row " + std::to_string(t + 1) +
                      ": response on the boundary of [0, 1] (use boundary adjustment)");
    }
  }
  if (opts.boundary_adjust) y = boundary_adjust(y, table.rows());

  Dataset data;
  data.y = std::move(y);
  data.X = design_matrix(table, mean_cols);
  data.Z = design_matrix(table, disp_cols);
  return data;
}

inline Dataset read_csv(const std::string& path, const std::string& response_col,
                        const std::vector<std::string>& mean_cols,
                        const std::vector<std::string>& disp_cols = {std::string(kIntercept)},
                        const IngestOptions& opts = {}) {
  return to_dataset(read_table(path), response_col, mean_cols, disp_cols, opts);
}

}  // namespace betachart::io
