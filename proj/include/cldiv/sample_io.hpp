#pragma once

#include "cldiv/core.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace cldiv {

// Comma separated numeric rows. Blank lines are ignored.
inline Sample read_sample(std::istream& in, Index expected_cols = -1, bool skip_header = false) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skip_header && lineno == 1) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t pos = 0;
      double v;
      try {
        v = std::stod(cell, &pos);
      } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidData, "non-numeric value on line " + std::to_string(lineno));
      }
      if (cell.find_first_not_of(" \t", pos) != std::string::npos)
        throw Error(ErrorCode::InvalidData, "trailing characters on line " + std::to_string(lineno));
      if (!std::isfinite(v)) throw Error(ErrorCode::InvalidData, "non-finite value on line " + std::to_string(lineno));
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw Error(ErrorCode::InvalidData, "ragged row on line " + std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::InvalidData, "no observations");
  Index cols = static_cast<Index>(rows.front().size());
  if (expected_cols >= 0 && cols != expected_cols)
    throw Error(ErrorCode::DimensionMismatch,
                "expected " + std::to_string(expected_cols) + " columns, got " + std::to_string(cols));
  Sample s;
  s.y.resize(static_cast<Index>(rows.size()), cols);
  for (Index i = 0; i < s.y.rows(); ++i)
    for (Index j = 0; j < cols; ++j) s.y(i, j) = rows[i][j];
  return s;
}

inline Sample read_sample(const std::string& path, Index expected_cols = -1, bool skip_header = false) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidData, "cannot open " + path);
  return read_sample(in, expected_cols, skip_header);
}

inline void write_sample(std::ostream& out, const Sample& s) {
  out << std::setprecision(17);
  for (Index i = 0; i < s.size(); ++i) {
    for (Index j = 0; j < s.dim(); ++j) out << (j ? "," : "") << s.y(i, j);
    out << '\n';
  }
}

inline void write_sample(const std::string& path, const Sample& s) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidData, "cannot write " + path);
  write_sample(out, s);
}

}  // namespace cldiv
