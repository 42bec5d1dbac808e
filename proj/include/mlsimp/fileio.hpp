#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace mlsimp {

/// Writes `contents` to a sibling temporary, then renames it over `path`.
/// Throws IoError naming the path on failure.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Whole-file read; throws IoError naming the path on failure.
std::string read_file(const std::filesystem::path& path);

}  // namespace mlsimp
