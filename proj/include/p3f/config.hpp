#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "p3f/stack_model.hpp"

namespace p3f {

/// Stack description loaded from the JSON schema documented in the README:
/// materials table keyed by name; layers as an ordered array of
/// {material, thickness_nm, polarity}; area_um2; optional geometry block.
struct StackConfig {
  Stack stack;
  std::optional<DeviceGeometry> geometry;
};

/// Throws p3f::Error with the JSON field path on schema violations,
/// e.g. "layers[1].thickness_nm: must be > 0".
StackConfig load_stack_config(std::string_view json_text);
StackConfig load_stack_config_file(const std::string& path);

}  // namespace p3f
