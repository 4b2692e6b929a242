#include "stiefel_dgt/matrix_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace stiefel_dgt {

static_assert(std::endian::native == std::endian::little,
              "DMAT I/O assumes a little-endian host");

namespace {
constexpr char kMagic[4] = {'D', 'M', 'A', 'T'};
}

void write_dmat(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("write_dmat: cannot open " + path.string());
  out.write(kMagic, 4);
  const std::uint64_t rows = static_cast<std::uint64_t>(m.rows());
  const std::uint64_t cols = static_cast<std::uint64_t>(m.cols());
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  if (!out) throw DataError("write_dmat: short write to " + path.string());
}

Matrix read_dmat(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("read_dmat: cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("read_dmat: bad magic in " + path.string());
  std::uint64_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), sizeof rows);
  in.read(reinterpret_cast<char*>(&cols), sizeof cols);
  if (!in || rows == 0 || cols == 0 || rows > (1ull << 32) || cols > (1ull << 32))
    throw DataError("read_dmat: bad header in " + path.string());
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::uint64_t i = 0; i < rows; ++i)
    for (std::uint64_t j = 0; j < cols; ++j) {
      double v;
      in.read(reinterpret_cast<char*>(&v), sizeof v);
      if (!in) throw DataError("read_dmat: truncated payload in " + path.string());
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  return m;
}

Matrix read_csv_matrix(const std::filesystem::path& path, bool skip_header) {
  std::ifstream in(path);
  if (!in) throw DataError("read_csv_matrix: cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && skip_header) continue;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
        row.push_back(v);
      } catch (const std::exception&) {
        throw DataError("read_csv_matrix: non-numeric entry '" + cell + "' at " + path.string() +
                        ":" + std::to_string(lineno));
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw DataError("read_csv_matrix: ragged row at " + path.string() + ":" +
                      std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("read_csv_matrix: no data in " + path.string());
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

void write_csv_matrix(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw DataError("write_csv_matrix: cannot open " + path.string());
  char buf[32];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      out << (j ? "," : "") << buf;
    }
    out << "\n";
  }
}

Matrix read_matrix_auto(const std::filesystem::path& path, bool csv_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("read_matrix_auto: cannot open " + path.string());
  char magic[4] = {0, 0, 0, 0};
  in.read(magic, 4);
  in.close();
  if (std::memcmp(magic, kMagic, 4) == 0) return read_dmat(path);
  return read_csv_matrix(path, csv_header);
}

}  // namespace stiefel_dgt
