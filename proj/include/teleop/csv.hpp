#ifndef TELEOP_CSV_HPP
#define TELEOP_CSV_HPP

#include <string>
#include <vector>

#include "teleop/se3.hpp"

namespace teleop {

/// Numeric CSV with a single header line.
struct CsvTable {
  std::vector<std::string> header;
  MatX data;  // one row per record

  [[nodiscard]] Eigen::Index column(const std::string& name) const;
};

/// Throws std::runtime_error on I/O failure, std::invalid_argument on
/// malformed content (ragged rows, non-numeric cells).
[[nodiscard]] CsvTable read_csv(const std::string& path);

/// Writes with enough digits to round-trip doubles exactly.
void write_csv(const std::string& path, const std::vector<std::string>& header, const MatX& data);

}  // namespace teleop

#endif  // TELEOP_CSV_HPP
