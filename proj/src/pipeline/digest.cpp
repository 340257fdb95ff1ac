#include "cbm/pipeline/digest.hpp"

#include <openssl/evp.h>

#include "cbm/core/error.hpp"
#include "cbm/core/text_io.hpp"

namespace cbm::pipeline {

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw RuntimeError("sha256: digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xF]);
  }
  return out;
}

std::string file_sha256(const std::string& path) { return sha256_hex(text::read_file(path)); }

}  // namespace cbm::pipeline
