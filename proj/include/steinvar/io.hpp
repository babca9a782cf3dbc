#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "steinvar/common.hpp"
#include "steinvar/core_stats.hpp"

namespace steinvar {

/// Render a double with full round-trip precision, locale-independent.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace io_detail {

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) {
    const auto first = field.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
      fields.emplace_back();
      continue;
    }
    const auto last = field.find_last_not_of(" \t\r");
    fields.push_back(field.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

}  // namespace io_detail

/// Read (y, X) from CSV: first column is the response, remaining columns the
/// design. An optional header row is detected by its first field not parsing
/// as a number. Decimal separator is '.'.
inline RegressionData read_regression_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataFormatError("cannot open data file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t ncols = 0;
  bool first_line = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = io_detail::split_fields(line);
    if (fields.empty()) continue;
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t j = 0; j < fields.size(); ++j)
      if (!io_detail::parse_double(fields[j], row[j])) {
        numeric = false;
        break;
      }
    if (!numeric) {
      if (first_line) {  // header row
        first_line = false;
        continue;
      }
      throw DataFormatError("non-numeric field at line " + std::to_string(lineno) + " of " +
                            path);
    }
    first_line = false;
    if (ncols == 0) {
      ncols = row.size();
      if (ncols < 2) throw DataFormatError("need a response column plus at least one predictor");
    } else if (row.size() != ncols) {
      throw DataFormatError("ragged row at line " + std::to_string(lineno) + " of " + path);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataFormatError("no data rows in " + path);

  const int n = static_cast<int>(rows.size());
  const int p = static_cast<int>(ncols) - 1;
  Eigen::VectorXd y(n);
  Eigen::MatrixXd x(n, p);
  for (int i = 0; i < n; ++i) {
    y[i] = rows[i][0];
    for (int j = 0; j < p; ++j) x(i, j) = rows[i][j + 1];
  }
  return RegressionData(std::move(y), std::move(x));
}

/// Write content to a temporary sibling and rename into place, so failures
/// never leave partial output.
inline void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataFormatError("cannot open output file: " + tmp.string());
    out << content;
    if (!out) throw DataFormatError("failed writing output file: " + tmp.string());
  }
  fs::rename(tmp, target);
}

}  // namespace steinvar
