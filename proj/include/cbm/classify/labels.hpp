#pragma once

#include <array>
#include <string>
#include <string_view>

namespace cbm::classify {

inline constexpr std::size_t kStyleCount = 4;
inline constexpr std::array<std::string_view, kStyleCount> kStyleNames = {
    "oil painting", "traditional Chinese painting", "sketch", "cartoon"};

struct StyleLabel {
  int id = 0;
  std::string_view name() const { return kStyleNames.at(static_cast<std::size_t>(id)); }
  friend bool operator==(const StyleLabel&, const StyleLabel&) = default;
};

// Throws ContractError outside 0..3 / for unknown names.
StyleLabel style_from_id(int id);
StyleLabel style_from_name(std::string_view name);

}  // namespace cbm::classify
