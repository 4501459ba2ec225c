#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace moral {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Whole file as a string; throws std::runtime_error naming the path.
std::string read_file(const std::filesystem::path& path);

/// Write via a temporary sibling and rename so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace moral
