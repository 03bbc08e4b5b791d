#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fbptf/numerics.hpp"

namespace fbptf::io {

/// Writes `contents` to a sibling temp file, then renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

std::string read_text(const std::filesystem::path& path);

/// Shortest-safe round-trip formatting (17 significant digits).
std::string format_double(double v);

/// Header-less CSV, one matrix row per line.
std::string matrix_to_csv(const Matrix& m);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

/// Parses a header-less numeric CSV. Ragged rows and non-numeric or
/// non-finite cells raise SchemaError with line and column.
Matrix read_matrix_csv(const std::filesystem::path& path);

/// `key = value` lines; blank lines and `#` comments are skipped. Duplicate
/// keys and lines without '=' raise SchemaError.
std::map<std::string, std::string> parse_key_values(const std::string& text, const std::string& file);
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);
std::string format_key_values(const std::vector<std::pair<std::string, std::string>>& entries);

/// Splits one CSV line on commas (no quoting support; none of our files need it).
std::vector<std::string> split_csv_line(const std::string& line);

/// Parses a finite double or throws SchemaError at (file, line, column).
double parse_cell(const std::string& cell, const std::string& file, std::size_t line, std::size_t column);

}  // namespace fbptf::io
