#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace siot::csv {

struct Row {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

/// Reads a comma-separated file, checks that the first non-comment line is
/// exactly `header`, and returns the data rows. Blank lines and lines whose
/// first character is '#' are skipped.
std::vector<Row> read(const std::string& path, std::string_view header);

std::vector<Row> parse(std::istream& in, const std::string& name, std::string_view header);

std::int64_t to_int(const Row& row, std::size_t col, const std::string& file);
double to_double(const Row& row, std::size_t col, const std::string& file);

/// Fixed 6-decimal rendering used by every numeric CSV export.
std::string fixed6(double v);

/// Shortest round-trip decimal rendering of a double.
std::string exact(double v);

void write_file(const std::string& path, const std::string& contents);

}  // namespace siot::csv
