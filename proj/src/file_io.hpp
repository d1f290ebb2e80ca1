#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace hubstar::detail {

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file, flushes it, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace hubstar::detail
