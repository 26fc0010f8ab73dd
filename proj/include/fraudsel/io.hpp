#pragma once

#include <filesystem>
#include <string>

namespace fraudsel {

// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

// Writes to a sibling temporary file and renames it over `path`, so readers
// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

}  // namespace fraudsel
