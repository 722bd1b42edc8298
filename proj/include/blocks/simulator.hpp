#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "blocks/agents.hpp"
#include "blocks/ledger.hpp"
#include "blocks/poi.hpp"
#include "blocks/procache.hpp"
#include "blocks/reputation.hpp"
#include "blocks/session.hpp"

namespace blocks {

struct EmbeddingConfig {
  std::uint32_t dim = 32;
  double variant_noise = 0.3;
};

struct AdversaryConfig {
  /// Direct cache accesses each malicious supplier makes per round to its own
  /// archived prompts.
  std::uint32_t probe_accesses_per_round = 0;
};

struct ScenarioConfig {
  std::uint64_t seed = 42;
  std::uint32_t rounds = 200;
  std::uint32_t n_honest_suppliers = 8;
  std::uint32_t n_malicious_suppliers = 3;
  std::uint32_t n_honest_validators = 8;
  std::uint32_t n_malicious_validators = 3;
  std::uint32_t n_users = 4;
  std::uint32_t n_malicious_users = 0;
  StrategyKind attack = StrategyKind::SelfPromotion;
  std::uint32_t topics = 40;
  std::uint32_t variants_per_topic = 5;
  /// Non-zero switches to the fixed question list: question i asks topic
  /// i mod topics, variant i / topics, in order.
  std::uint32_t questions = 0;
  std::uint32_t queries_per_round = 4;
  CachePolicy cache_policy = CachePolicy::PROCache;
  Tokens payment_per_query = 1.0;
  Tokens user_endowment = 10000.0;
  double initial_reputation = 0.5;
  double d_hit = 1.0;
  double d_miss = 10.0;

  ReputationParams reputation;
  RewardParams reward;
  CacheConfig cache;
  QuorumConfig quorum;
  QualityModel quality;
  EscrowShares escrow;
  AdversaryConfig adversary;
  EmbeddingConfig embedding;

  void validate() const;
};

struct NodeFrame {
  NodeId node_id;
  Role role = Role::Supplier;
  bool malicious = false;
  double reputation = 0.0;
  Tokens balance = 0.0;
};

struct RoleSummary {
  double honest_mean = 0.0;
  /// Half-width of the 95% normal-approximation interval.
  double honest_ci = 0.0;
  double malicious_mean = 0.0;
};

struct MetricsFrame {
  std::int64_t round = 0;
  std::vector<NodeFrame> nodes;
  RoleSummary suppliers;
  RoleSummary validators;
  double hit_rate = 0.0;
  double mean_in_cache_reputation = 0.0;
  std::size_t resident_count = 0;
  std::uint64_t evictions = 0;
  double mean_service_delay = 0.0;
  std::size_t ledger_prompts = 0;
};

struct RewardRow {
  std::int64_t round = 0;
  NodeId node_id;
  double impact = 0.0;
  Tokens reward = 0.0;
  Tokens balance = 0.0;
};

struct SessionLogRow {
  std::int64_t round = 0;
  std::uint64_t session_index = 0;
  SessionState from = SessionState::Created;
  SessionState to = SessionState::Created;
  EventKind event = EventKind::NewQuery;
};

struct InvariantReport {
  /// Largest |sum of balances - endowed - minted| seen after any round.
  double max_conservation_error = 0.0;
  /// Largest |payment - payouts - refund| over all sessions.
  double max_escrow_error = 0.0;
  std::uint64_t illegal_transitions = 0;
  std::uint64_t duplicate_events = 0;
  /// DataTable grew outside a cache-miss finalize.
  std::uint64_t ledger_growth_violations = 0;

  bool ok(double tol = 1e-9) const {
    return max_conservation_error <= tol && max_escrow_error <= tol && illegal_transitions == 0 &&
           duplicate_events == 0 && ledger_growth_violations == 0;
  }
};

struct RunResult {
  ScenarioConfig config;
  std::vector<MetricsFrame> frames;
  std::vector<RewardRow> rewards;
  std::vector<SessionLogRow> session_log;
  std::string ledger_json;
  LedgerStats ledger_stats;
  std::uint64_t queries = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t rejected_sessions = 0;
  /// Queries skipped because the asking user could not cover the payment.
  std::uint64_t unfunded_queries = 0;
  InvariantReport invariants;
  double elapsed_seconds = 0.0;
};

RunResult run(const ScenarioConfig& config);

struct SweepEntry {
  std::string label;
  ScenarioConfig config;
  /// Keep config.seed instead of deriving base seed + index.
  bool seed_pinned = false;
};

struct SweepOutput {
  std::string label;
  RunResult result;
};

/// Runs every entry; unpinned entry i uses base seed + i. Up to `threads` runs execute
/// concurrently.
std::vector<SweepOutput> sweep(std::vector<SweepEntry> entries, std::uint64_t base_seed,
                               unsigned threads = 1);

struct DedupReport {
  std::uint64_t questions_processed = 0;
  std::size_t ledger_prompts = 0;
  double reduction = 0.0;
};

/// The fixed-question storage experiment. Needs `questions` > 0.
DedupReport dedup_experiment(const ScenarioConfig& config);
DedupReport dedup_report(const RunResult& result);

/// Mean and last-n population SD of the honest supplier or validator series.
double final_honest_mean(const RunResult& r, Role role);
double final_malicious_mean(const RunResult& r, Role role);
double honest_tail_sd(const RunResult& r, Role role, std::size_t last_n);

// Output files.
std::string reputation_csv(const RunResult& r);
std::string cache_metrics_csv(const RunResult& r);
std::string rewards_csv(const RunResult& r);
std::string ledger_stats_csv(const RunResult& r);
std::string sessions_jsonl(const RunResult& r);
std::string summary_json(const RunResult& r);

/// Writes every output file into `dir`. Refuses to overwrite existing result
/// files unless `force`.
void write_outputs(const RunResult& r, const std::filesystem::path& dir, bool force,
                   bool dump_ledger);

/// printf("%.9g")
std::string fmt_double(double x);

}  // namespace blocks
