#pragma once

#include "ttnmf/net_model.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ttnmf {

enum class MatrixKind { routing, traffic, link, mask, any };

/// Parses a rectangular, header-less numeric CSV. Blank lines and lines
/// starting with '#' are skipped. Routing and mask kinds must hold only 0 or
/// 1; traffic and link kinds must be nonnegative (the first ten offending
/// cells are listed). Errors are ParseError with 1-based row/column.
Matrix parse_matrix_csv(std::string_view text, MatrixKind kind,
                        std::string_view source = "<input>");
Matrix load_matrix_csv(const std::filesystem::path& path, MatrixKind kind);

/// Formats a double with 17 significant digits ("nan" for NaN).
std::string format_double(double value);

/// Row-major CSV, no header, '\n' line endings.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

/// CSV with a header row; cells are written verbatim.
void write_table_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows);

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
/// FNV-1a over the dimensions and little-endian IEEE-754 bytes of a matrix.
std::uint64_t matrix_checksum(const Matrix& m);

}  // namespace ttnmf
