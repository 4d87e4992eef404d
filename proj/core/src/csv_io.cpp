#include "ttnmf/csv_io.hpp"

#include "ttnmf/errors.hpp"

#include <fmt/format.h>

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ttnmf {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

const char* kind_name(MatrixKind kind) {
  switch (kind) {
    case MatrixKind::routing:
      return "routing";
    case MatrixKind::traffic:
      return "traffic";
    case MatrixKind::link:
      return "link-flow";
    case MatrixKind::mask:
      return "mask";
    case MatrixKind::any:
      return "matrix";
  }
  return "matrix";
}

void validate_kind(const Matrix& m, MatrixKind kind, std::string_view source) {
  if (kind == MatrixKind::any) return;
  const bool binary = kind == MatrixKind::routing || kind == MatrixKind::mask;
  std::vector<std::string> bad;
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      const bool ok = binary ? (v == 0.0 || v == 1.0) : (v >= 0.0 && std::isfinite(v));
      if (ok) continue;
      ++count;
      if (bad.size() < 10) bad.push_back(fmt::format("({},{})={}", i + 1, j + 1, v));
    }
  if (count == 0) return;
  std::string cells;
  for (const auto& b : bad) cells += (cells.empty() ? "" : ", ") + b;
  throw ParseError(fmt::format("{}: {} {} cell(s) {}: {}{}", source, count, kind_name(kind),
                               binary ? "not 0 or 1" : "negative or not finite", cells,
                               count > bad.size() ? ", ..." : ""));
}

}  // namespace

Matrix parse_matrix_csv(std::string_view text, MatrixKind kind, std::string_view source) {
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;

    std::vector<double> row;
    std::size_t cell_start = 0;
    const std::size_t row_no = rows.size() + 1;
    while (true) {
      const std::size_t comma = line.find(',', cell_start);
      const std::string_view cell =
          trim(line.substr(cell_start, comma == std::string_view::npos ? line.npos
                                                                       : comma - cell_start));
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size())
        throw ParseError(fmt::format("{}: non-numeric cell '{}' at row {}, column {} (line {})",
                                     source, cell, row_no, row.size() + 1, line_no));
      row.push_back(value);
      if (comma == std::string_view::npos) break;
      cell_start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(fmt::format("{}: row {} has {} cells but row 1 has {} (line {})", source,
                                   row_no, row.size(), rows.front().size(), line_no));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(fmt::format("{}: no data rows", source));

  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  validate_kind(m, kind, source);
  return m;
}

Matrix load_matrix_csv(const std::filesystem::path& path, MatrixKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(fmt::format("cannot open {}", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_matrix_csv(buffer.str(), kind, path.string());
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  return fmt::format("{:.17g}", value);
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(fmt::format("cannot write {}", path.string()));
  std::string line;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    line.clear();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) line += ',';
      line += format_double(m(i, j));
    }
    line += '\n';
    out << line;
  }
}

void write_table_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(fmt::format("cannot write {}", path.string()));
  auto emit = [&out](const std::vector<std::string>& cells) {
    for (std::size_t j = 0; j < cells.size(); ++j) out << (j > 0 ? "," : "") << cells[j];
    out << '\n';
  };
  emit(header);
  for (const auto& r : rows) emit(r);
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t matrix_checksum(const Matrix& m) {
  std::string bytes;
  bytes.reserve(16 + 8 * static_cast<std::size_t>(m.size()));
  auto put = [&bytes](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<char>((v >> (8 * b)) & 0xffU));
  };
  put(static_cast<std::uint64_t>(m.rows()));
  put(static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) put(std::bit_cast<std::uint64_t>(m(i, j)));
  return fnv1a(bytes);
}

}  // namespace ttnmf
