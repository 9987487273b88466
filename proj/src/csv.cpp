#include "vspin/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vspin {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void CsvTable::write(const std::string& path) const {
  if (header.size() != columns.size())
    throw std::invalid_argument("CsvTable: header/column count mismatch");
  const size_t n_rows = columns.empty() ? 0 : columns.front().size();
  for (const auto& col : columns)
    if (col.size() != n_rows) throw std::invalid_argument("CsvTable: ragged columns");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("CsvTable: cannot open '" + path + "' for writing");
  for (const auto& c : comments) out << "# " << c << "\n";
  for (size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << "\n";
  for (size_t r = 0; r < n_rows; ++r) {
    for (size_t k = 0; k < columns.size(); ++k)
      out << (k ? "," : "") << format_double(columns[k][r]);
    out << "\n";
  }
  if (!out) throw std::runtime_error("CsvTable: write failed for '" + path + "'");
}

std::vector<std::vector<double>> read_csv_columns(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_csv_columns: cannot open '" + path + "'");
  std::vector<std::vector<double>> columns;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        size_t used = 0;
        const double v = std::stod(cell, &used);
        row.push_back(v);
        if (used == 0) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) continue;  // header row
    if (columns.empty()) columns.resize(row.size());
    if (row.size() != columns.size())
      throw std::runtime_error("read_csv_columns: ragged row in '" + path + "'");
    for (size_t k = 0; k < row.size(); ++k) columns[k].push_back(row[k]);
  }
  if (columns.empty() || columns.front().empty())
    throw std::runtime_error("read_csv_columns: no numeric data in '" + path + "'");
  return columns;
}

}  // namespace vspin
