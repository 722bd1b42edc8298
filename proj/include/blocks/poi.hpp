#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "blocks/types.hpp"

namespace blocks {

/// Access counters and reputation for one node over one settlement window.
struct ImpactRecord {
  NodeId node_id;
  std::uint64_t prompt_accesses = 0;
  std::uint64_t validation_accesses = 0;
  double reputation = 0.0;
};

struct RewardParams {
  double beta = 0.5;
  /// Tokens paid to the round's proposer on top of its impact reward.
  Tokens proposer_bonus = 0.0;

  void validate() const;
};

/// Token balances. Supply only grows through mint(); transfer() moves tokens
/// between accounts and never lets a balance go negative.
class WealthLedger {
 public:
  void endow(const NodeId& id, Tokens amount);
  void mint(const NodeId& id, Tokens amount);
  void transfer(const NodeId& from, const NodeId& to, Tokens amount);

  Tokens balance(const NodeId& id) const;
  const std::map<NodeId, Tokens>& balances() const { return balances_; }

  Tokens total_endowed() const { return endowed_; }
  Tokens total_minted() const { return minted_; }
  Tokens total_balance() const;

 private:
  std::map<NodeId, Tokens> balances_;
  Tokens endowed_ = 0.0;
  Tokens minted_ = 0.0;
};

/// R * (beta * A_p + (1 - beta) * A_v)
Tokens impact_reward(const ImpactRecord& rec, const RewardParams& params);

/// Highest impact wins; exact ties go to the lexicographically smallest id.
NodeId select_proposer(std::span<const ImpactRecord> records, const RewardParams& params);

/// Splits a resale fee pool across providers in proportion to their prompt
/// reputations. Throws AllZeroReputation when no provider has positive
/// reputation; the caller keeps the pool in that case.
std::map<NodeId, Tokens> distribute_resale(Tokens fee_pool,
                                           const std::map<NodeId, double>& provider_reps);

struct SettlementLine {
  NodeId node_id;
  double impact = 0.0;
  Tokens reward = 0.0;
  Tokens payout = 0.0;
};

/// Mints each node's impact reward plus its prompt-access payouts
/// (sum over its prompts of accesses * prompt reputation).
WealthLedger settle_round(WealthLedger wealth, std::span<const ImpactRecord> records,
                          const std::map<NodeId, Tokens>& prompt_payouts,
                          const RewardParams& params,
                          std::vector<SettlementLine>* lines = nullptr);

}  // namespace blocks
