#include "ktm/csv.hpp"

#include "ktm/errors.hpp"

#include <charconv>
#include <fstream>
#include <system_error>

namespace ktm {

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  require(ec == std::errc(), ErrorCode::numerical, "double formatting failed");
  return std::string(buf, ptr);
}

double parse_double(const std::string& text) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  require(ec == std::errc() && ptr == end, ErrorCode::io,
          "not a number: '" + text + "'");
  return value;
}

long long parse_int(const std::string& text) {
  long long value = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  require(ec == std::errc() && ptr == end, ErrorCode::io,
          "not an integer: '" + text + "'");
  return value;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  fields.push_back(field);
  return fields;
}

int CsvTable::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io, "cannot open CSV file: " + path);
  CsvTable table;
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::io,
          path + ": missing header row");
  table.header = split_csv_line(line);
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    require(fields.size() == table.header.size(), ErrorCode::io,
            path + ": row " + std::to_string(line_no) + " has " +
                std::to_string(fields.size()) + " fields, header has " +
                std::to_string(table.header.size()));
    table.rows.push_back(std::move(fields));
  }
  return table;
}

}  // namespace ktm
