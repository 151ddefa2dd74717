#pragma once

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "imcabs/errors.hpp"

namespace imcabs::csv {

/// Shortest decimal form that round-trips to the same double.
inline std::string number(double v) {
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::vector<std::string> split(std::string_view line, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    auto field = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.remove_suffix(1);
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    out.emplace_back(field);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double to_double(const std::string& s, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw InputError("line " + std::to_string(line) + ": expected a number, got '" + s + "'");
  }
  return v;
}

inline std::size_t to_index(const std::string& s, std::size_t line) {
  const double v = to_double(s, line);
  if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
    throw InputError("line " + std::to_string(line) + ": expected a non-negative index, got '" + s + "'");
  }
  return static_cast<std::size_t>(v);
}

/// Reads data rows after a mandatory header; blank lines are skipped.
template <typename RowFn>
void for_each_row(std::istream& in, std::size_t min_fields, RowFn&& fn) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("missing header row");
  for (std::size_t no = 2; std::getline(in, line); ++no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split(line);
    if (fields.size() < min_fields) {
      throw InputError("line " + std::to_string(no) + ": expected at least " +
                       std::to_string(min_fields) + " fields");
    }
    fn(fields, no);
  }
}

}  // namespace imcabs::csv
