#pragma once

#include <istream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cbm/core/matrix.hpp"

namespace cbm::text {

// Shortest-general formatting with the given significant digits.
std::string format_real(double v, int significant_digits);
// Comma-joined values; digits = 17 round-trips doubles exactly.
std::string join_reals(std::span<const double> values, int significant_digits);
// Parses a comma-separated list of decimals. Throws ContractError on junk.
std::vector<double> parse_reals(std::string_view line);
// Parses `key=value key=value ...` into an ordered map.
std::map<std::string, std::string> parse_header(std::string_view line);
// Header value lookup that throws ContractError when the key is absent.
const std::string& header_value(const std::map<std::string, std::string>& header, const std::string& key);
long long parse_int(std::string_view s);
double parse_double(std::string_view s);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

// Named parameter block: `<name> <rows> <cols>` then one row per line at
// full round-trip precision.
std::string format_block(std::string_view name, const Matrix& m);
std::string format_block(std::string_view name, std::span<const double> column);
// Reads the next block and checks its name (and shape when given).
Matrix parse_block(std::istream& in, std::string_view expected_name);
std::vector<double> parse_vector_block(std::istream& in, std::string_view expected_name, std::size_t expected_size);

}  // namespace cbm::text
