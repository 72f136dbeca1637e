#include "siot/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "siot/error.hpp"

namespace siot::csv {
namespace {

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
    out.emplace_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::vector<Row> parse(std::istream& in, const std::string& name, std::string_view header) {
  std::vector<Row> rows;
  const std::vector<std::string> expected = split(header);
  bool seen_header = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.empty() || line.front() == '#') continue;
    auto fields = split(line);
    if (!seen_header) {
      if (fields != expected) {
        throw ParseError(name, line_no, "expected header '" + std::string(header) + "'");
      }
      seen_header = true;
      continue;
    }
    if (fields.size() != expected.size()) {
      throw ParseError(name, line_no,
                       "expected " + std::to_string(expected.size()) + " fields, got " +
                           std::to_string(fields.size()));
    }
    rows.push_back({line_no, std::move(fields)});
  }
  if (!seen_header) throw ParseError(name, line_no, "missing header '" + std::string(header) + "'");
  return rows;
}

std::vector<Row> read(const std::string& path, std::string_view header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return parse(in, path, header);
}

std::int64_t to_int(const Row& row, std::size_t col, const std::string& file) {
  const std::string& s = row.fields.at(col);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw ParseError(file, row.line, "not an integer: '" + s + "'");
  }
  return v;
}

double to_double(const Row& row, std::size_t col, const std::string& file) {
  const std::string& s = row.fields.at(col);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw ParseError(file, row.line, "not a number: '" + s + "'");
  }
  return v;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string exact(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << contents;
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace siot::csv
