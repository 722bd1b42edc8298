#include <cmath>

#include <openssl/evp.h>

#include "blocks/error.hpp"
#include "blocks/sha256.hpp"
#include "blocks/types.hpp"

namespace blocks {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::MissingEntry: return "MissingEntry";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::NonPositiveMaxReputation: return "NonPositiveMaxReputation";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::AllZeroReputation: return "AllZeroReputation";
    case Errc::NonPositiveInput: return "NonPositiveInput";
    case Errc::DuplicateNodeId: return "DuplicateNodeId";
    case Errc::BadEmbedding: return "BadEmbedding";
    case Errc::MissingNode: return "MissingNode";
    case Errc::InsufficientFunds: return "InsufficientFunds";
    case Errc::ZeroPayment: return "ZeroPayment";
    case Errc::UnknownUser: return "UnknownUser";
    case Errc::WrongState: return "WrongState";
    case Errc::DuplicateSubmission: return "DuplicateSubmission";
    case Errc::DuplicateValidation: return "DuplicateValidation";
    case Errc::NotFinalizable: return "NotFinalizable";
    case Errc::ConfigError: return "ConfigError";
    case Errc::OutputExists: return "OutputExists";
  }
  return "Unknown";
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

Digest sha256(std::string_view data) {
  Digest out{};
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr);
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(Errc::BadEmbedding, "dimension mismatch " + std::to_string(a.size()) + " vs " +
                                        std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

bool is_unit(std::span<const double> v, double tol) {
  return !v.empty() && std::abs(norm(v) - 1.0) <= tol;
}

}  // namespace blocks
