#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "strata/point_cloud.hpp"

namespace strata {

enum class MatrixFormat { csv, binary, npy };

MatrixFormat parse_format(const std::string& name);
std::string to_string(MatrixFormat f);

/// .csv/.txt -> csv, .npy -> npy, anything else (.bin, .pcloud) -> binary.
MatrixFormat detect_format(const std::filesystem::path& path);

enum class ElementType { f32, f64 };

/// Reads a p x D matrix. CSV header lines are optional; the binary layout is
/// "PCLOUD01", a 4-byte little-endian header length, a JSON header
/// {"p","D","dtype","order":"row"}, then the row-major payload; npy accepts
/// little-endian f4/f8 in C order. Values are widened to double.
PointCloud load_matrix(const std::filesystem::path& path,
                       std::optional<MatrixFormat> format = std::nullopt);

void save_matrix(const std::filesystem::path& path, const PointCloud& cloud,
                 std::optional<MatrixFormat> format = std::nullopt,
                 ElementType dtype = ElementType::f64);

/// One token per line, line i belongs to point i. Supports \uXXXX escapes
/// (surrogate pairs combined) and \\ for a literal backslash.
std::vector<std::string> load_vocab(const std::filesystem::path& path);

/// Decodes the escapes accepted by load_vocab.
std::string unescape_token(const std::string& line);

/// Escapes control characters, backslashes and a leading space so the
/// result round-trips through unescape_token.
std::string escape_token(const std::string& token);

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace strata
