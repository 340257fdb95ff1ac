#include "cbm/core/text_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "cbm/core/error.hpp"

namespace cbm::text {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string format_real(double v, int significant_digits) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, significant_digits);
  return std::string(buf, res.ptr);
}

std::string join_reals(std::span<const double> values, int significant_digits) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_real(values[i], significant_digits);
  }
  return out;
}

double parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ContractError("not a decimal number: '" + std::string(s) + "'");
  return v;
}

long long parse_int(std::string_view s) {
  s = trim(s);
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ContractError("not an integer: '" + std::string(s) + "'");
  return v;
}

std::vector<double> parse_reals(std::string_view line) {
  std::vector<double> out;
  line = trim(line);
  if (line.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(parse_double(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::map<std::string, std::string> parse_header(std::string_view line) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(trim(line))};
  std::string token;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos || eq == 0) throw ContractError("malformed header field '" + token + "'");
    out[token.substr(0, eq)] = token.substr(eq + 1);
  }
  return out;
}

const std::string& header_value(const std::map<std::string, std::string>& header, const std::string& key) {
  auto it = header.find(key);
  if (it == header.end()) throw ContractError("header is missing '" + key + "'");
  return it->second;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError("cannot write '" + path + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw RuntimeError("failed writing '" + path + "'");
}

}  // namespace cbm::text

namespace cbm::text {

std::string format_block(std::string_view name, const Matrix& m) {
  std::string out = std::string(name) + " " + std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
  for (std::size_t r = 0; r < m.rows(); ++r) out += join_reals(m.row(r), 17) + "\n";
  return out;
}

std::string format_block(std::string_view name, std::span<const double> column) {
  return format_block(name, Matrix(column.size(), 1, std::vector<double>(column.begin(), column.end())));
}

Matrix parse_block(std::istream& in, std::string_view expected_name) {
  std::string line;
  while (std::getline(in, line) && trim(line).empty()) {
  }
  std::istringstream head(line);
  std::string name;
  long long rows = -1, cols = -1;
  head >> name >> rows >> cols;
  if (name != expected_name) throw ContractError("model file: expected block '" + std::string(expected_name) + "'");
  require(rows >= 0 && cols >= 0, "model file: bad dimensions for block '" + name + "'");
  Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (!std::getline(in, line)) throw ContractError("model file: block '" + name + "' is truncated");
    const auto v = parse_reals(line);
    require(v.size() == m.cols(), "model file: block '" + name + "' has a short row");
    std::copy(v.begin(), v.end(), m.row(r).begin());
  }
  require(m.all_finite(), "model file: block '" + name + "' has non-finite values");
  return m;
}

std::vector<double> parse_vector_block(std::istream& in, std::string_view expected_name, std::size_t expected_size) {
  Matrix m = parse_block(in, expected_name);
  require(m.cols() == 1 && m.rows() == expected_size,
          "model file: block '" + std::string(expected_name) + "' has the wrong size");
  return m.data();
}

}  // namespace cbm::text
