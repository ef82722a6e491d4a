#pragma once

#include <Eigen/Core>
#include <string>

namespace tempcov {

// Reads a numeric CSV with a mandatory header row (column names are not
// interpreted).  Rejects ragged rows, empty cells, and non-finite values.
Eigen::MatrixXd read_csv_matrix(const std::string& path);

// Writes with header prefix1..prefixN and full round-trip precision.
void write_csv_matrix(const std::string& path,
                      const Eigen::Ref<const Eigen::MatrixXd>& data,
                      const std::string& prefix = "x");

}  // namespace tempcov
