#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace talp {

/// Whole-file read in binary mode. Throws IoError.
std::string read_file(const std::filesystem::path& path);

/// Creates parent directories as needed and truncates. Throws IoError.
void write_file(const std::filesystem::path& path, std::string_view content);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace talp
