#pragma once

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dictcs/error.hpp"
#include "dictcs/matcore.hpp"

namespace dictcs {

// Shared matrix text format: one row per line, comma-separated decimals, no header.
inline Matrix parse_matrix(std::istream& in, const std::string& source = "<stream>") {
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw Error(ErrorKind::Io, source + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const char* b = cell.c_str();
      char* e = nullptr;
      errno = 0;
      double v = std::strtod(b, &e);
      while (*e == ' ' || *e == '\t') ++e;
      if (e == b || *e != '\0' || errno == ERANGE) fail("cannot parse '" + cell + "' as a number");
      if (!std::isfinite(v)) fail("non-finite entry '" + cell + "'");
      row.push_back(v);
    }
    if (!line.empty() && line.back() == ',') fail("trailing comma");
    if (!rows.empty() && row.size() != rows.front().size())
      fail("row has " + std::to_string(row.size()) + " entries, expected " +
           std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    lineno = 0;
    fail("no matrix rows");
  }
  Matrix M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
  return M;
}

inline Matrix read_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, path + ":0: cannot open for reading");
  return parse_matrix(in, path);
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v == 0.0 ? 0.0 : v);
  return buf;
}

inline void format_matrix(std::ostream& out, const Matrix& M) {
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j) out << ',';
      out << format_double(M(i, j));
    }
    out << '\n';
  }
}

inline void write_matrix(const std::string& path, const Matrix& M) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, path + ": cannot open for writing");
  format_matrix(out, M);
  if (!out) throw Error(ErrorKind::Io, path + ": write failed");
}

inline std::string join_indices(const std::vector<int>& idx, int base = 1) {
  std::string s;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(idx[i] + base);
  }
  return s;
}

}  // namespace dictcs
