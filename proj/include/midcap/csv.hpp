#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace midcap::csv {

std::vector<std::string> split_line(const std::string& line);

// Strict numeric parsing (whole field must consume, locale-free).
double parse_double(const std::string& field, const std::string& file,
                    std::size_t line_no, const std::string& column);
std::int64_t parse_int(const std::string& field, const std::string& file,
                       std::size_t line_no, const std::string& column);

// Shortest round-trip formatting so written files re-read bit-exact.
std::string format_double(double v);

// Header-validated reader over a comma-separated file. The header must
// match `expected` exactly (names and order); anything else is a
// SchemaError naming the first offending column.
class Reader {
 public:
  Reader(const std::string& path, const std::vector<std::string>& expected);

  // Returns false at end of file. Skips blank lines. A row with the
  // wrong field count is a ParseError with the line number.
  bool next(std::vector<std::string>& fields);

  std::size_t line_no() const { return line_no_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t n_columns_;
  std::size_t line_no_ = 1;  // header was line 1
};

}  // namespace midcap::csv
