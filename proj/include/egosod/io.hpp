#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace egosod {

/// Reads a whole file. Throws IoError.
std::string read_file(const std::filesystem::path& path);

/// Writes `content` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partial file. Creates parent directories.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

std::string base64_encode(std::string_view data);

}  // namespace egosod
