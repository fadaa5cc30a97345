#ifndef ECHOSIM_CSV_IO_HPP
#define ECHOSIM_CSV_IO_HPP

#include <iosfwd>
#include <string>
#include <vector>
#include <Eigen/Dense>

namespace echosim {

/// Numeric CSV with a single header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Throws ValidationError for an unknown column name.
  Eigen::ArrayXd column(const std::string& name) const;
};

/// Parses comma-separated numbers; blank lines are skipped. Throws ValidationError on
/// ragged rows or non-numeric cells.
CsvTable read_csv(std::istream& is);

std::vector<std::string> split(const std::string& text, char sep);
std::string trim(const std::string& text);

/// Shortest text that parses back to exactly `value`.
std::string shortest(double value);

} // namespace echosim

#endif // ECHOSIM_CSV_IO_HPP
