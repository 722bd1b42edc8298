#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace blocks {

using NodeId = std::string;
using Tokens = double;
using Digest = std::array<std::uint8_t, 32>;

/// Dense embedding vector. Operations that need unit norm check it themselves.
using Embedding = std::vector<double>;

std::string to_hex(std::span<const std::uint8_t> bytes);
inline std::string to_hex(std::string_view bytes) {
  return to_hex(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> v);
bool is_unit(std::span<const double> v, double tol = 1e-6);

inline double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

}  // namespace blocks
