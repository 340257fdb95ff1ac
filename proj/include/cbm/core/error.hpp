#pragma once

#include <stdexcept>
#include <string>

namespace cbm {

// Raised when caller-supplied input violates an operation's preconditions.
// The CLI maps it to exit code 2.
class ContractError : public std::invalid_argument {
 public:
  explicit ContractError(const std::string& what) : std::invalid_argument(what) {}
};

// Raised when a well-formed computation cannot complete (I/O failure,
// non-finite loss, degenerate data). The CLI maps it to exit code 1.
class RuntimeError : public std::runtime_error {
 public:
  explicit RuntimeError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ContractError(what);
}

}  // namespace cbm
