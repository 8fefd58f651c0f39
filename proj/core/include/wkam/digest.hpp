#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace wkam {

/// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);
/// Raw 32-byte SHA-256.
std::string sha256_raw(std::string_view bytes);
/// SHA-256 of a file's contents; throws std::runtime_error if unreadable.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace wkam
