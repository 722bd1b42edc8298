#pragma once

#include <functional>
#include <string_view>

#include "blocks/types.hpp"

namespace blocks {

Digest sha256(std::string_view data);

/// Content hash used by the ledger and cache. Tests swap in a truncated hash
/// to force collisions.
using HashFn = std::function<Digest(std::string_view)>;

}  // namespace blocks
