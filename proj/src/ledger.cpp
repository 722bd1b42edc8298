#include "blocks/ledger.hpp"

#include <cmath>

#include "blocks/error.hpp"
#include "json.hpp"

namespace blocks {

namespace {

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

nlohmann::json entry_json(const LedgerEntry& entry) {
  return std::visit(
      overloaded{
          [](const DataTableEntry& e) {
            return nlohmann::json{{"prompt_content", e.prompt_content},
                                  {"supplier_id", e.supplier_id}};
          },
          [](const PromptReputationEntry& e) {
            auto validations = nlohmann::json::array();
            for (const auto& v : e.validations) {
              validations.push_back({{"validator_id", v.validator_id},
                                     {"validator_reputation", v.validator_reputation},
                                     {"score", v.score}});
            }
            return nlohmann::json{{"reputation", e.reputation}, {"validations", validations}};
          },
          [](const SupplierReputationEntry& e) { return nlohmann::json{{"reputation", e.reputation}}; },
          [](const ValidatorReputationEntry& e) {
            return nlohmann::json{{"reputation", e.reputation}};
          },
      },
      entry);
}

}  // namespace

std::string_view prefix_name(Prefix p) noexcept {
  switch (p) {
    case Prefix::DataTable: return "DataTable";
    case Prefix::ReputationPrompt: return "ReputationPrompt";
    case Prefix::ReputationSupplier: return "ReputationSupplier";
    case Prefix::ReputationValidator: return "ReputationValidator";
  }
  return "?";
}

LedgerKey LedgerKey::prompt(Prefix p, const Digest& digest, std::uint32_t count) {
  return {p, std::string(digest.begin(), digest.end()), count};
}

std::string LedgerKey::encoded() const {
  std::string out;
  out.reserve(1 + hash.size() + 4);
  out.push_back(static_cast<char>(prefix));
  out += hash;
  for (int shift = 24; shift >= 0; shift -= 8) {
    out.push_back(static_cast<char>((count >> shift) & 0xff));
  }
  return out;
}

LedgerKey LedgerKey::paired() const {
  switch (prefix) {
    case Prefix::DataTable: return {Prefix::ReputationPrompt, hash, count};
    case Prefix::ReputationPrompt: return {Prefix::DataTable, hash, count};
    default: return *this;
  }
}

Ledger::Ledger(double initial_prompt_reputation, HashFn hash)
    : initial_prompt_reputation_(initial_prompt_reputation), hash_(std::move(hash)) {
  if (!in_unit(initial_prompt_reputation_)) {
    throw Error(Errc::OutOfRange, "initial prompt reputation outside [0, 1]");
  }
}

Ledger::Slot* Ledger::slot(const LedgerKey& key) {
  auto it = store_.find(key.encoded());
  return it == store_.end() ? nullptr : &it->second;
}

const Ledger::Slot* Ledger::slot(const LedgerKey& key) const {
  auto it = store_.find(key.encoded());
  return it == store_.end() ? nullptr : &it->second;
}

std::optional<LedgerKey> Ledger::find_prompt(std::string_view prompt_content) const {
  const Digest digest = hash_(prompt_content);
  for (std::uint32_t count = 0;; ++count) {
    const auto key = LedgerKey::prompt(Prefix::DataTable, digest, count);
    const Slot* s = slot(key);
    if (s == nullptr) return std::nullopt;
    if (std::get<DataTableEntry>(s->entry).prompt_content == prompt_content) return key;
  }
}

LedgerKey Ledger::put_prompt(std::string_view prompt_content, const NodeId& supplier_id) {
  if (prompt_content.empty()) throw Error(Errc::OutOfRange, "empty prompt content");

  const Digest digest = hash_(prompt_content);
  std::uint32_t count = 0;
  for (;; ++count) {
    const auto key = LedgerKey::prompt(Prefix::DataTable, digest, count);
    const Slot* s = slot(key);
    if (s == nullptr) break;
    if (std::get<DataTableEntry>(s->entry).prompt_content == prompt_content) return key;
  }

  const auto key = LedgerKey::prompt(Prefix::DataTable, digest, count);
  store_.emplace(key.encoded(),
                 Slot{key, DataTableEntry{std::string(prompt_content), supplier_id}});
  const auto rep_key = key.paired();
  store_.emplace(rep_key.encoded(),
                 Slot{rep_key, PromptReputationEntry{initial_prompt_reputation_, {}}});
  return key;
}

void Ledger::register_node(Prefix prefix, const NodeId& id, double initial_reputation) {
  if (!in_unit(initial_reputation)) {
    throw Error(Errc::OutOfRange, "initial reputation for " + id);
  }
  LedgerKey key{prefix, id, 0};
  if (slot(key) != nullptr) return;
  switch (prefix) {
    case Prefix::ReputationSupplier:
      store_.emplace(key.encoded(), Slot{key, SupplierReputationEntry{initial_reputation}});
      break;
    case Prefix::ReputationValidator:
      store_.emplace(key.encoded(), Slot{key, ValidatorReputationEntry{initial_reputation}});
      break;
    default:
      throw Error(Errc::OutOfRange, "register_node needs a supplier or validator prefix");
  }
}

std::optional<LedgerEntry> Ledger::get(const LedgerKey& key) const {
  const Slot* s = slot(key);
  if (s == nullptr) return std::nullopt;
  return s->entry;
}

const LedgerEntry* Ledger::find(const LedgerKey& key) const {
  const Slot* s = slot(key);
  return s == nullptr ? nullptr : &s->entry;
}

void Ledger::append_validation(const LedgerKey& key, const ValidationRecord& record) {
  if (!in_unit(record.score) || !in_unit(record.validator_reputation)) {
    throw Error(Errc::OutOfRange, "validation by " + record.validator_id + " outside [0, 1]");
  }
  Slot* s = key.prefix == Prefix::ReputationPrompt ? slot(key) : nullptr;
  if (s == nullptr) throw Error(Errc::MissingEntry, "no ReputationPrompt " + key.hash_hex());
  std::get<PromptReputationEntry>(s->entry).validations.push_back(record);
}

void Ledger::set_reputation(const LedgerKey& key, double value) {
  if (!in_unit(value)) {
    throw Error(Errc::OutOfRange, "reputation " + std::to_string(value) + " outside [0, 1]");
  }
  Slot* s = key.prefix == Prefix::DataTable ? nullptr : slot(key);
  if (s == nullptr) {
    throw Error(Errc::MissingEntry, std::string(prefix_name(key.prefix)) + " " + key.hash_hex());
  }
  std::visit(overloaded{[](DataTableEntry&) {}, [&](auto& e) { e.reputation = value; }}, s->entry);
}

double Ledger::reputation(const LedgerKey& key) const {
  const Slot* s = key.prefix == Prefix::DataTable ? nullptr : slot(key);
  if (s == nullptr) {
    throw Error(Errc::MissingEntry, std::string(prefix_name(key.prefix)) + " " + key.hash_hex());
  }
  return std::visit(overloaded{[](const DataTableEntry&) { return 0.0; },
                               [](const auto& e) { return e.reputation; }},
                    s->entry);
}

void Ledger::for_each(Prefix prefix,
                      const std::function<void(const LedgerKey&, const LedgerEntry&)>& fn) const {
  const std::string lo(1, static_cast<char>(prefix));
  const std::string hi(1, static_cast<char>(static_cast<std::uint8_t>(prefix) + 1));
  for (auto it = store_.lower_bound(lo); it != store_.end() && it->first < hi; ++it) {
    fn(it->second.key, it->second.entry);
  }
}

LedgerStats Ledger::stats() const {
  LedgerStats st;
  for (const auto& [_, s] : store_) {
    ++st.entries_per_prefix[static_cast<std::size_t>(s.key.prefix) - 1];
    if (const auto* dt = std::get_if<DataTableEntry>(&s.entry)) {
      st.total_prompt_bytes += dt->prompt_content.size();
    }
  }
  return st;
}

std::string Ledger::snapshot_json(int indent) const {
  nlohmann::json out = nlohmann::json::object();
  for (Prefix p : kAllPrefixes) {
    auto rows = nlohmann::json::array();
    for_each(p, [&](const LedgerKey& key, const LedgerEntry& entry) {
      rows.push_back({{"key_hex", key.hash_hex()}, {"count", key.count}, {"entry", entry_json(entry)}});
    });
    out[std::string(prefix_name(p))] = std::move(rows);
  }
  return out.dump(indent);
}

}  // namespace blocks
