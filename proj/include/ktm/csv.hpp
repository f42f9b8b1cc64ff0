#pragma once

#include <string>
#include <vector>

namespace ktm {

// Shortest representation that parses back to the same double; always uses
// '.' as the decimal separator regardless of locale.
std::string format_double(double value);

double parse_double(const std::string& text);
long long parse_int(const std::string& text);

std::vector<std::string> split_csv_line(const std::string& line);

// Whole-file CSV reader: first row is the header. Rejects ragged rows.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);

}  // namespace ktm
