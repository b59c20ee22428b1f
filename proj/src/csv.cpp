#include "teleop/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace teleop {

Eigen::Index CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<Eigen::Index>(i);
  }
  throw std::invalid_argument("csv: no column named " + name);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open csv: " + path);

  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("csv: empty file: " + path);
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.header.push_back(cell);
  }
  const auto cols = static_cast<Eigen::Index>(table.header.size());
  if (cols == 0) throw std::invalid_argument("csv: empty header: " + path);

  std::vector<double> values;
  Eigen::Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    Eigen::Index count = 0;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw std::invalid_argument("csv: non-numeric cell '" + cell + "' in " + path);
      }
      if (used != cell.size()) {
        throw std::invalid_argument("csv: non-numeric cell '" + cell + "' in " + path);
      }
      values.push_back(v);
      ++count;
    }
    if (count != cols) throw std::invalid_argument("csv: ragged row in " + path);
    ++rows;
  }
  table.data.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      table.data(r, c) = values[static_cast<std::size_t>(r * cols + c)];
    }
  }
  return table;
}

void write_csv(const std::string& path, const std::vector<std::string>& header, const MatX& data) {
  if (data.size() > 0 && static_cast<Eigen::Index>(header.size()) != data.cols()) {
    throw std::invalid_argument("csv: header size does not match column count");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write csv: " + path);
  for (std::size_t i = 0; i < header.size(); ++i) {
    out << header[i] << (i + 1 < header.size() ? "," : "\n");
  }
  char buf[40];
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", data(r, c));
      out << buf << (c + 1 < data.cols() ? "," : "\n");
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace teleop
