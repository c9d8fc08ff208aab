#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "momentswap/error.hpp"

namespace momentswap {

// A delimited text file held in memory: header plus data rows, each row
// remembering the physical line it came from.
struct DelimitedTable {
  std::string source;
  char delimiter = ',';
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;

  std::optional<std::size_t> find_column(std::string_view name) const {
    auto lower = [](std::string_view s) {
      std::string out(s);
      std::transform(out.begin(), out.end(), out.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      return out;
    };
    const std::string key = lower(name);
    for (std::size_t i = 0; i < header.size(); ++i)
      if (lower(header[i]) == key) return i;
    return std::nullopt;
  }

  std::size_t column(std::string_view name) const {
    auto idx = find_column(name);
    if (!idx) throw DatasetError(source + ": missing required column '" + std::string(name) + "'");
    return *idx;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_line(std::string_view line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    auto field = trim(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start));
    if (field.size() >= 2 && field.front() == '"' && field.back() == '"')
      field = field.substr(1, field.size() - 2);
    out.emplace_back(field);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

inline double parse_double(std::string_view s) {
  s = detail::trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ValidationError("not a number: '" + std::string(s) + "'");
  return v;
}

// Reads a comma- or tab-delimited file with a header row. Blank lines are
// skipped; an empty file (no header) is a dataset error.
inline DelimitedTable read_delimited(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open '" + path.string() + "'");
  DelimitedTable t;
  t.source = path.string();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    if (t.header.empty()) {
      t.delimiter = line.find('\t') != std::string::npos ? '\t' : ',';
      t.header = detail::split_line(line, t.delimiter);
      continue;
    }
    t.rows.push_back(detail::split_line(line, t.delimiter));
    t.lines.push_back(lineno);
  }
  if (t.header.empty()) throw DatasetError(t.source + ": empty file");
  return t;
}

// Shortest round-trippable representation; stores never lose precision.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

inline std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path) : out_(path) {
    if (!out_) throw Error("cannot write '" + path.string() + "'");
  }

  template <typename... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    ((emit(fields, first)), ...);
    out_ << '\n';
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) out_ << (i ? "," : "") << fields[i];
    out_ << '\n';
  }

 private:
  void emit(const std::string& s, bool& first) { sep(first) << s; }
  void emit(const char* s, bool& first) { sep(first) << s; }
  void emit(double v, bool& first) { sep(first) << format_double(v); }
  void emit(int v, bool& first) { sep(first) << v; }
  void emit(long v, bool& first) { sep(first) << v; }
  void emit(std::size_t v, bool& first) { sep(first) << v; }

  std::ofstream& sep(bool& first) {
    if (!first) out_ << ',';
    first = false;
    return out_;
  }

  std::ofstream out_;
};

}  // namespace momentswap
