#pragma once

#include <string>
#include <string_view>

namespace cbm::pipeline {

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string file_sha256(const std::string& path);

}  // namespace cbm::pipeline
