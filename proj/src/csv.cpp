#include "midcap/csv.hpp"

#include <charconv>

#include "midcap/errors.hpp"

namespace midcap::csv {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    std::string field = (comma == std::string::npos)
                            ? line.substr(start)
                            : line.substr(start, comma - start);
    if (!field.empty() && field.back() == '\r') field.pop_back();
    out.push_back(std::move(field));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(const std::string& field, const std::string& file,
                    std::size_t line_no, const std::string& column) {
  double v = 0.0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
    throw ParseError(file + " line " + std::to_string(line_no) +
                     ": cannot parse '" + column + "' value '" + field + "'");
  }
  return v;
}

std::int64_t parse_int(const std::string& field, const std::string& file,
                       std::size_t line_no, const std::string& column) {
  std::int64_t v = 0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
    throw ParseError(file + " line " + std::to_string(line_no) +
                     ": cannot parse '" + column + "' value '" + field + "'");
  }
  return v;
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Reader::Reader(const std::string& path, const std::vector<std::string>& expected)
    : path_(path), in_(path) {
  if (!in_.is_open()) {
    throw ConfigError("cannot open file: " + path);
  }
  std::string header;
  if (!std::getline(in_, header)) {
    throw SchemaError(path + ": empty file, expected header");
  }
  auto cols = split_line(header);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i >= cols.size()) {
      throw SchemaError(path + ": missing column '" + expected[i] + "'");
    }
    if (cols[i] != expected[i]) {
      throw SchemaError(path + ": expected column '" + expected[i] +
                        "' at position " + std::to_string(i + 1) + ", found '" +
                        cols[i] + "'");
    }
  }
  if (cols.size() > expected.size()) {
    throw SchemaError(path + ": unexpected extra column '" +
                      cols[expected.size()] + "'");
  }
  n_columns_ = expected.size();
}

bool Reader::next(std::vector<std::string>& fields) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (line.empty() || line == "\r") continue;
    fields = split_line(line);
    if (fields.size() != n_columns_) {
      throw ParseError(path_ + " line " + std::to_string(line_no_) + ": expected " +
                       std::to_string(n_columns_) + " fields, found " +
                       std::to_string(fields.size()));
    }
    return true;
  }
  return false;
}

}  // namespace midcap::csv
