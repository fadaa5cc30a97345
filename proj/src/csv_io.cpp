#include "echosim/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <istream>

#include "echosim/errors.hpp"

namespace echosim {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string::size_type start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.push_back(text.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string trim(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

namespace {

double parse_cell(const std::string& cell, std::size_t line_no) {
  const std::string s = trim(cell);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ValidationError("line " + std::to_string(line_no) + ": not a number: '" + s + "'");
  return value;
}

} // namespace

CsvTable read_csv(std::istream& is) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split(line, ',');
    if (table.header.empty()) {
      for (auto& c : cells) table.header.push_back(trim(c));
      continue;
    }
    if (cells.size() != table.header.size())
      throw ValidationError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(table.header.size()) + " columns");
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_cell(c, line_no));
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw ValidationError("CSV input is empty");
  return table;
}

Eigen::ArrayXd CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ValidationError("CSV has no column '" + name + "'");
  const auto idx = static_cast<std::size_t>(it - header.begin());
  Eigen::ArrayXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out(static_cast<Eigen::Index>(r)) = rows[r][idx];
  return out;
}

std::string shortest(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

} // namespace echosim
