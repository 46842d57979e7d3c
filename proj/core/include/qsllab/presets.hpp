#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace qsllab::scenario {

// Named configuration text for one figure recipe.
struct Preset {
  std::string name;
  std::string description;
  std::string text;  // INI, parsed by parse_config
};

const std::vector<Preset>& presets();

// Throws ParameterError for an unknown name.
const Preset& find_preset(std::string_view name);

}  // namespace qsllab::scenario
