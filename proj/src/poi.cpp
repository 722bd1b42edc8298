#include "blocks/poi.hpp"

#include <cmath>

#include "blocks/error.hpp"

namespace blocks {

void RewardParams::validate() const {
  if (!(beta >= 0.0 && beta <= 1.0)) throw Error(Errc::ConfigError, "reward.beta must be in [0, 1]");
  if (!(proposer_bonus >= 0.0)) throw Error(Errc::ConfigError, "reward.proposer_bonus must be >= 0");
}

void WealthLedger::endow(const NodeId& id, Tokens amount) {
  if (!(amount >= 0.0)) throw Error(Errc::OutOfRange, "negative endowment for " + id);
  balances_[id] += amount;
  endowed_ += amount;
}

void WealthLedger::mint(const NodeId& id, Tokens amount) {
  if (!(amount >= 0.0)) throw Error(Errc::OutOfRange, "negative mint for " + id);
  balances_[id] += amount;
  minted_ += amount;
}

void WealthLedger::transfer(const NodeId& from, const NodeId& to, Tokens amount) {
  if (!(amount >= 0.0)) throw Error(Errc::OutOfRange, "negative transfer from " + from);
  auto it = balances_.find(from);
  const Tokens have = it == balances_.end() ? 0.0 : it->second;
  if (have < amount) {
    throw Error(Errc::InsufficientFunds,
                from + " has " + std::to_string(have) + ", needs " + std::to_string(amount));
  }
  it->second -= amount;
  balances_[to] += amount;
}

Tokens WealthLedger::balance(const NodeId& id) const {
  auto it = balances_.find(id);
  return it == balances_.end() ? 0.0 : it->second;
}

Tokens WealthLedger::total_balance() const {
  Tokens sum = 0.0;
  for (const auto& [_, b] : balances_) sum += b;
  return sum;
}

Tokens impact_reward(const ImpactRecord& rec, const RewardParams& params) {
  return rec.reputation * (params.beta * static_cast<double>(rec.prompt_accesses) +
                           (1.0 - params.beta) * static_cast<double>(rec.validation_accesses));
}

NodeId select_proposer(std::span<const ImpactRecord> records, const RewardParams& params) {
  if (records.empty()) throw Error(Errc::EmptyInput, "no impact records");
  const ImpactRecord* best = &records.front();
  double best_impact = impact_reward(*best, params);
  for (const auto& rec : records.subspan(1)) {
    const double impact = impact_reward(rec, params);
    if (impact > best_impact || (impact == best_impact && rec.node_id < best->node_id)) {
      best = &rec;
      best_impact = impact;
    }
  }
  return best->node_id;
}

std::map<NodeId, Tokens> distribute_resale(Tokens fee_pool,
                                           const std::map<NodeId, double>& provider_reps) {
  if (!(fee_pool >= 0.0)) throw Error(Errc::OutOfRange, "negative fee pool");
  double total = 0.0;
  for (const auto& [id, rep] : provider_reps) {
    if (!(rep >= 0.0)) throw Error(Errc::OutOfRange, "negative reputation for " + id);
    total += rep;
  }
  if (!(total > 0.0)) throw Error(Errc::AllZeroReputation, "no provider has positive reputation");

  std::map<NodeId, Tokens> out;
  for (const auto& [id, rep] : provider_reps) out[id] = fee_pool * (rep / total);
  return out;
}

WealthLedger settle_round(WealthLedger wealth, std::span<const ImpactRecord> records,
                          const std::map<NodeId, Tokens>& prompt_payouts,
                          const RewardParams& params, std::vector<SettlementLine>* lines) {
  std::map<NodeId, SettlementLine> by_node;
  for (const auto& rec : records) {
    auto& line = by_node[rec.node_id];
    line.node_id = rec.node_id;
    line.impact += impact_reward(rec, params);
    line.reward += impact_reward(rec, params);
  }
  for (const auto& [id, amount] : prompt_payouts) {
    if (!(amount >= 0.0)) throw Error(Errc::OutOfRange, "negative payout for " + id);
    auto& line = by_node[id];
    line.node_id = id;
    line.payout += amount;
  }
  if (!records.empty() && params.proposer_bonus > 0.0) {
    by_node[select_proposer(records, params)].reward += params.proposer_bonus;
  }
  for (const auto& [id, line] : by_node) {
    wealth.mint(id, line.reward + line.payout);
    if (lines != nullptr) lines->push_back(line);
  }
  return wealth;
}

}  // namespace blocks
