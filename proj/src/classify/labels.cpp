#include "cbm/classify/labels.hpp"

#include "cbm/core/error.hpp"

namespace cbm::classify {

StyleLabel style_from_id(int id) {
  require(id >= 0 && id < static_cast<int>(kStyleCount), "style id must lie in 0..3, got " + std::to_string(id));
  return StyleLabel{id};
}

StyleLabel style_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kStyleNames.size(); ++i)
    if (kStyleNames[i] == name) return StyleLabel{static_cast<int>(i)};
  throw ContractError("unknown style name '" + std::string(name) + "'");
}

}  // namespace cbm::classify
