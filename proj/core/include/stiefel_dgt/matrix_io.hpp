#pragma once

#include <filesystem>

#include "stiefel_dgt/manifold.hpp"

namespace stiefel_dgt {

// DMAT layout: magic "DMAT", u64 rows, u64 cols (little-endian), then
// rows*cols IEEE-754 f64 values row-major.
void write_dmat(const std::filesystem::path& path, const Matrix& m);
Matrix read_dmat(const std::filesystem::path& path);

// Comma-separated decimal floats, no header by default.
Matrix read_csv_matrix(const std::filesystem::path& path, bool skip_header = false);
void write_csv_matrix(const std::filesystem::path& path, const Matrix& m);

// Sniffs the DMAT magic, falls back to CSV.
Matrix read_matrix_auto(const std::filesystem::path& path, bool csv_header = false);

}  // namespace stiefel_dgt
