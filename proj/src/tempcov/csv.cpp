#include "tempcov/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tempcov/errors.hpp"

namespace tempcov {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream stream(line);
  while (std::getline(stream, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, const std::string& path,
                  std::size_t line_no, std::size_t col) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  // Tolerate surrounding spaces but nothing else.
  while (begin < end && *begin == ' ') ++begin;
  while (end > begin && *(end - 1) == ' ') --end;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || begin == end) {
    throw CorruptFileError(path + ": line " + std::to_string(line_no) +
                           ", column " + std::to_string(col + 1) +
                           ": cannot parse '" + cell + "' as a number");
  }
  if (!std::isfinite(value)) {
    throw CorruptFileError(path + ": line " + std::to_string(line_no) +
                           ", column " + std::to_string(col + 1) +
                           ": non-finite value");
  }
  return value;
}

}  // namespace

Eigen::MatrixXd read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);

  std::string line;
  if (!std::getline(in, line)) {
    throw CorruptFileError(path + ": empty file, expected a header row");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::size_t cols = split_line(line).size();
  if (cols == 0) throw CorruptFileError(path + ": header row has no columns");

  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;  // tolerate a trailing blank line
    const auto cells = split_line(line);
    if (cells.size() != cols) {
      throw CorruptFileError(path + ": line " + std::to_string(line_no) +
                             " has " + std::to_string(cells.size()) +
                             " cells, expected " + std::to_string(cols));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      values.push_back(parse_cell(cells[c], path, line_no, c));
    }
    ++rows;
  }

  Eigen::MatrixXd out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          values[r * cols + c];
    }
  }
  return out;
}

void write_csv_matrix(const std::string& path,
                      const Eigen::Ref<const Eigen::MatrixXd>& data,
                      const std::string& prefix) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.precision(17);
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    if (c) out << ',';
    out << prefix << (c + 1);
  }
  out << '\n';
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
      if (c) out << ',';
      out << data(r, c);
    }
    out << '\n';
  }
  if (!out.flush()) throw IoError("write failed: " + path);
}

}  // namespace tempcov
