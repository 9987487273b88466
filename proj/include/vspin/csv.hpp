#pragma once

#include <string>
#include <vector>

namespace vspin {

struct CsvTable {
  std::vector<std::string> comments;  // written as leading "# ..." lines
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;  // equal lengths

  void write(const std::string& path) const;
};

// Numeric columns from a CSV file; skips '#' comments and a header row.
std::vector<std::vector<double>> read_csv_columns(const std::string& path);

std::string format_double(double v);

}  // namespace vspin
