#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace nesslab {

/// Scientific notation with 16 significant digits, '.' decimal separator.
std::string format_double(double v);

/// Writes content atomically (temp file + rename).
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// FNV-1a 64-bit checksum of a file's bytes, as a hex string.
std::string file_checksum(const std::filesystem::path& path);

/// "x,q_1,..,q_n" rows at cell points.
std::string profile_csv(const std::vector<double>& x, const Eigen::MatrixXd& values_by_cell);

/// Dense matrix with a coordinate header row and leading coordinate column.
std::string matrix_csv(const std::vector<double>& x_rows, const std::vector<double>& x_cols,
                       const Eigen::MatrixXd& m);

/// Generic table: header names + column vectors of equal length.
std::string table_csv(const std::vector<std::string>& headers,
                      const std::vector<Eigen::VectorXd>& columns);

} // namespace nesslab
