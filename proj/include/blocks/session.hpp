#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "blocks/ledger.hpp"
#include "blocks/poi.hpp"
#include "blocks/procache.hpp"
#include "blocks/reputation.hpp"
#include "blocks/types.hpp"

namespace blocks {

enum class SessionState { Created, CacheQueried, CollectingKnowledge, Validating, Finalized };
std::string_view state_name(SessionState s) noexcept;

enum class EventKind { NewQuery, ValidateUpdate, KnowledgeUpdate, SessionFinalized };
std::string_view event_name(EventKind k) noexcept;

enum class Outcome { Served, Rejected };

struct Event {
  EventKind kind = EventKind::NewQuery;
  std::uint64_t session_index = 0;
  /// Set on SessionFinalized only.
  std::optional<Outcome> outcome;
};

struct Query {
  std::string text;
  std::uint32_t topic_id = 0;
  std::uint32_t variant_id = 0;
  Embedding embedding;
};

struct Submission {
  NodeId supplier_id;
  std::string content;
  Embedding embedding;
  /// Simulation ground truth; agents never read it for another node.
  double true_quality = 0.0;
};

/// One validator's scores, one per submission in submission order. The
/// official validator also reports a similarity per submission.
struct SessionValidation {
  NodeId validator_id;
  std::vector<double> scores;
  std::vector<double> similarities;
};

struct QuorumConfig {
  std::uint32_t min_suppliers = 3;
  std::uint32_t min_validators = 3;
  /// 0 means every validator validates every session.
  std::uint32_t validator_sample_size = 0;
  bool require_official = true;

  void validate() const;
};

/// Split of a session payment. On a miss: supplier / validators / cache. On a
/// hit: cache fee / validators, the supplier share becomes the resale pool.
struct EscrowShares {
  double supplier = 0.6;
  double validators = 0.3;
  double cache = 0.1;

  void validate() const;
};

struct SessionResult {
  Outcome outcome = Outcome::Served;
  std::size_t winner = 0;
  std::string content;
  double prompt_reputation = 0.0;
  /// Prompt reputation per submission, in submission order. Empty when rejected.
  std::vector<double> submission_reputations;
  std::optional<LedgerKey> ledger_key;
  std::set<NodeId> flagged_validators;
  std::vector<NodeId> failed_suppliers;
  std::map<NodeId, Tokens> payouts;
  Tokens refund = 0.0;
  bool cache_inserted = false;
  std::vector<std::string> evicted;
};

struct QuerySession {
  std::uint64_t session_index = 0;
  NodeId user_id;
  Query query;
  std::string rationale;
  Tokens payment = 0.0;
  SessionState state = SessionState::Created;
  std::optional<bool> cache_hit;
  /// Cache node serving a hit.
  std::optional<std::string> cache_node_id;
  std::vector<Submission> submissions;
  std::vector<SessionValidation> regular;
  std::optional<SessionValidation> official;
  std::optional<SessionResult> result;

  NodeId escrow_account() const { return "escrow/" + std::to_string(session_index); }
};

struct Transition {
  std::int64_t round = 0;
  std::uint64_t session_index = 0;
  SessionState from = SessionState::Created;
  SessionState to = SessionState::Created;
  EventKind event = EventKind::NewQuery;
};

/// Everything finalize() touches outside the session itself.
struct FinalizeContext {
  Ledger& ledger;
  WealthLedger& wealth;
  KnowledgeCache* cache = nullptr;
  const ReputationParams& params;
  const EscrowShares& shares;
  NodeId cache_account = "cache";
  std::int64_t round = 0;
  /// LLM-service (user) reputations, keyed by user id.
  std::map<NodeId, double>& user_reputation;
  /// Accuracy the user reports for the delivered submission.
  std::function<double(const Submission&)> user_accuracy;
};

/// Session store, ordered event queue and transition log. Single writer.
class SessionBook {
 public:
  explicit SessionBook(QuorumConfig quorum = {});

  void register_user(const NodeId& id) { users_.insert(id); }
  bool is_user(const NodeId& id) const { return users_.contains(id); }

  void set_round(std::int64_t round) { round_ = round; }

  /// Stage 1. Moves `payment` from the user into the session escrow account.
  std::uint64_t create_session(const NodeId& user_id, Query query, Tokens payment,
                               WealthLedger& wealth);

  /// Stage 2. A hit carries the cached node's content as the sole submission.
  EventKind post_cache(std::uint64_t index, std::optional<Submission> hit,
                       std::optional<std::string> cache_node_id = std::nullopt);

  /// Stage 3. Returns ValidateUpdate once the supplier quorum is reached.
  std::optional<EventKind> update_knowledge(std::uint64_t index, Submission submission);

  /// Stage 4 input. Returns true when the session has become finalizable.
  bool update_validation(std::uint64_t index, SessionValidation validation, bool is_official);

  bool finalizable(std::uint64_t index) const;

  /// Stage 4 completion. See the implementation for the step order.
  const SessionResult& finalize(std::uint64_t index, FinalizeContext& ctx);

  const QuerySession& session(std::uint64_t index) const;
  std::size_t size() const { return sessions_.size(); }

  std::optional<Event> poll_event();
  const std::deque<Event>& pending_events() const { return events_; }
  const std::vector<Transition>& transitions() const { return transitions_; }
  const QuorumConfig& quorum() const { return quorum_; }

  /// Drops finalized sessions and the transition log to bound memory.
  void compact();

 private:
  QuerySession& mutable_session(std::uint64_t index);
  void move(QuerySession& s, SessionState to, EventKind event);
  void emit(QuerySession& s, EventKind kind, std::optional<Outcome> outcome = std::nullopt);

  QuorumConfig quorum_;
  std::int64_t round_ = 0;
  std::uint64_t next_index_ = 0;
  std::map<std::uint64_t, QuerySession> sessions_;
  std::map<std::uint64_t, std::uint8_t> emitted_;
  std::set<NodeId> users_;
  std::deque<Event> events_;
  std::vector<Transition> transitions_;
};

/// Deterministic stand-in for the query generation module.
std::string make_rationale(const Query& query);

/// True when `from -> to` is one of the lifecycle edges.
bool allowed_transition(SessionState from, SessionState to) noexcept;

}  // namespace blocks
