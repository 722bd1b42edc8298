#pragma once

#include <optional>
#include <string_view>
#include <vector>

namespace blocks {

/// Canonical experiment scenarios compiled into the binary from presets/*.toml.
std::vector<std::string_view> preset_names();
std::optional<std::string_view> preset_text(std::string_view name);

}  // namespace blocks
