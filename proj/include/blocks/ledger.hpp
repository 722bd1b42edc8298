#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "blocks/reputation.hpp"
#include "blocks/sha256.hpp"
#include "blocks/types.hpp"

namespace blocks {

enum class Prefix : std::uint8_t {
  DataTable = 0x01,
  ReputationPrompt = 0x02,
  ReputationSupplier = 0x03,
  ReputationValidator = 0x04,
};

inline constexpr std::array<Prefix, 4> kAllPrefixes = {
    Prefix::DataTable, Prefix::ReputationPrompt, Prefix::ReputationSupplier,
    Prefix::ReputationValidator};

std::string_view prefix_name(Prefix p) noexcept;

/// (prefix, hash, count). For the prompt prefixes `hash` holds the 32 raw
/// digest bytes; for the node prefixes it holds the node id and count is 0.
struct LedgerKey {
  Prefix prefix = Prefix::DataTable;
  std::string hash;
  std::uint32_t count = 0;

  static LedgerKey prompt(Prefix p, const Digest& digest, std::uint32_t count);
  static LedgerKey supplier(const NodeId& id) { return {Prefix::ReputationSupplier, id, 0}; }
  static LedgerKey validator(const NodeId& id) { return {Prefix::ReputationValidator, id, 0}; }

  /// prefix || hash || big-endian count; the store's ordering key.
  std::string encoded() const;
  std::string hash_hex() const { return to_hex(hash); }

  /// The ReputationPrompt key paired with a DataTable key, and back.
  LedgerKey paired() const;

  auto operator<=>(const LedgerKey&) const = default;
};

struct DataTableEntry {
  std::string prompt_content;
  NodeId supplier_id;
};

struct PromptReputationEntry {
  double reputation = 0.0;
  std::vector<ValidationRecord> validations;
};

struct SupplierReputationEntry {
  double reputation = 0.0;
};

struct ValidatorReputationEntry {
  double reputation = 0.0;
};

using LedgerEntry = std::variant<DataTableEntry, PromptReputationEntry, SupplierReputationEntry,
                                 ValidatorReputationEntry>;

struct LedgerStats {
  std::array<std::size_t, 4> entries_per_prefix{};
  std::size_t total_prompt_bytes = 0;

  std::size_t count(Prefix p) const {
    return entries_per_prefix[static_cast<std::size_t>(p) - 1];
  }
};

/// Persistent protocol state: an ordered key-value map with prefix
/// namespacing. Prompts are content-addressed with a collision counter;
/// reputations are only changed through set_reputation.
///
/// Single writer. Concurrent readers are fine while no write is in flight.
class Ledger {
 public:
  explicit Ledger(double initial_prompt_reputation = 0.5, HashFn hash = sha256);

  /// Idempotent by content: identical content returns the existing DataTable
  /// key and keeps the first supplier's attribution.
  LedgerKey put_prompt(std::string_view prompt_content, const NodeId& supplier_id);

  /// Creates a supplier or validator reputation record if it does not exist.
  void register_node(Prefix prefix, const NodeId& id, double initial_reputation);

  std::optional<LedgerEntry> get(const LedgerKey& key) const;
  const LedgerEntry* find(const LedgerKey& key) const;

  void append_validation(const LedgerKey& key, const ValidationRecord& record);
  void set_reputation(const LedgerKey& key, double value);

  /// Reputation stored under a ReputationPrompt/Supplier/Validator key.
  double reputation(const LedgerKey& key) const;

  /// DataTable key holding this exact content, if any.
  std::optional<LedgerKey> find_prompt(std::string_view prompt_content) const;

  LedgerStats stats() const;
  std::size_t size() const { return store_.size(); }
  double initial_prompt_reputation() const { return initial_prompt_reputation_; }

  /// Visits entries of one prefix in key order.
  void for_each(Prefix prefix,
                const std::function<void(const LedgerKey&, const LedgerEntry&)>& fn) const;

  /// {prefix name: [{key_hex, count, entry}]} with lowercase hex keys.
  std::string snapshot_json(int indent = 2) const;

 private:
  struct Slot {
    LedgerKey key;
    LedgerEntry entry;
  };

  Slot* slot(const LedgerKey& key);
  const Slot* slot(const LedgerKey& key) const;

  double initial_prompt_reputation_;
  HashFn hash_;
  std::map<std::string, Slot> store_;
};

}  // namespace blocks
