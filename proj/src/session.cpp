#include "blocks/session.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "blocks/error.hpp"
#include "blocks/sha256.hpp"

namespace blocks {

std::string_view state_name(SessionState s) noexcept {
  switch (s) {
    case SessionState::Created: return "Created";
    case SessionState::CacheQueried: return "CacheQueried";
    case SessionState::CollectingKnowledge: return "CollectingKnowledge";
    case SessionState::Validating: return "Validating";
    case SessionState::Finalized: return "Finalized";
  }
  return "?";
}

std::string_view event_name(EventKind k) noexcept {
  switch (k) {
    case EventKind::NewQuery: return "NewQuery";
    case EventKind::ValidateUpdate: return "ValidateUpdate";
    case EventKind::KnowledgeUpdate: return "KnowledgeUpdate";
    case EventKind::SessionFinalized: return "SessionFinalized";
  }
  return "?";
}

bool allowed_transition(SessionState from, SessionState to) noexcept {
  using S = SessionState;
  switch (from) {
    case S::Created: return to == S::CacheQueried;
    case S::CacheQueried: return to == S::Validating || to == S::CollectingKnowledge;
    case S::CollectingKnowledge: return to == S::Validating;
    case S::Validating: return to == S::Finalized;
    case S::Finalized: return false;
  }
  return false;
}

void QuorumConfig::validate() const {
  if (min_suppliers < 1) throw Error(Errc::ConfigError, "quorum.min_suppliers must be >= 1");
  if (min_validators < 1) throw Error(Errc::ConfigError, "quorum.min_validators must be >= 1");
}

void EscrowShares::validate() const {
  for (double x : {supplier, validators, cache}) {
    if (!(x >= 0.0 && x <= 1.0)) throw Error(Errc::ConfigError, "escrow shares must be in [0, 1]");
  }
  if (std::abs(supplier + validators + cache - 1.0) > 1e-9) {
    throw Error(Errc::ConfigError, "escrow shares must sum to 1");
  }
}

std::string make_rationale(const Query& query) {
  return "Find knowledge on topic " + std::to_string(query.topic_id) + " that answers: " + query.text;
}

SessionBook::SessionBook(QuorumConfig quorum) : quorum_(quorum) { quorum_.validate(); }

QuerySession& SessionBook::mutable_session(std::uint64_t index) {
  auto it = sessions_.find(index);
  if (it == sessions_.end()) throw Error(Errc::MissingEntry, "session " + std::to_string(index));
  return it->second;
}

const QuerySession& SessionBook::session(std::uint64_t index) const {
  auto it = sessions_.find(index);
  if (it == sessions_.end()) throw Error(Errc::MissingEntry, "session " + std::to_string(index));
  return it->second;
}

void SessionBook::move(QuerySession& s, SessionState to, EventKind event) {
  if (!allowed_transition(s.state, to)) {
    throw std::logic_error("illegal transition " + std::string(state_name(s.state)) + " -> " +
                           std::string(state_name(to)));
  }
  transitions_.push_back({round_, s.session_index, s.state, to, event});
  s.state = to;
}

void SessionBook::emit(QuerySession& s, EventKind kind, std::optional<Outcome> outcome) {
  auto& mask = emitted_[s.session_index];
  const auto bit = static_cast<std::uint8_t>(1u << static_cast<unsigned>(kind));
  if (mask & bit) throw std::logic_error("event emitted twice");
  mask |= bit;
  events_.push_back({kind, s.session_index, outcome});
}

std::optional<Event> SessionBook::poll_event() {
  if (events_.empty()) return std::nullopt;
  Event e = events_.front();
  events_.pop_front();
  return e;
}

std::uint64_t SessionBook::create_session(const NodeId& user_id, Query query, Tokens payment,
                                          WealthLedger& wealth) {
  if (!users_.contains(user_id)) throw Error(Errc::UnknownUser, user_id);
  if (!(payment > 0.0)) throw Error(Errc::ZeroPayment, "payment must be positive");

  QuerySession s;
  s.session_index = next_index_;
  s.user_id = user_id;
  s.payment = payment;
  s.rationale = make_rationale(query);
  s.query = std::move(query);
  wealth.transfer(user_id, s.escrow_account(), payment);

  ++next_index_;
  auto& stored = sessions_.emplace(s.session_index, std::move(s)).first->second;
  emit(stored, EventKind::NewQuery);
  move(stored, SessionState::CacheQueried, EventKind::NewQuery);
  return stored.session_index;
}

EventKind SessionBook::post_cache(std::uint64_t index, std::optional<Submission> hit,
                                  std::optional<std::string> cache_node_id) {
  QuerySession& s = mutable_session(index);
  if (s.state != SessionState::CacheQueried) {
    throw Error(Errc::WrongState, "post_cache in " + std::string(state_name(s.state)));
  }
  s.cache_hit = hit.has_value();
  if (hit) {
    s.submissions.push_back(std::move(*hit));
    s.cache_node_id = std::move(cache_node_id);
    emit(s, EventKind::ValidateUpdate);
    move(s, SessionState::Validating, EventKind::ValidateUpdate);
    return EventKind::ValidateUpdate;
  }
  emit(s, EventKind::KnowledgeUpdate);
  move(s, SessionState::CollectingKnowledge, EventKind::KnowledgeUpdate);
  return EventKind::KnowledgeUpdate;
}

std::optional<EventKind> SessionBook::update_knowledge(std::uint64_t index, Submission submission) {
  QuerySession& s = mutable_session(index);
  if (s.state != SessionState::CollectingKnowledge) {
    throw Error(Errc::WrongState, "update_knowledge in " + std::string(state_name(s.state)));
  }
  for (const auto& prev : s.submissions) {
    if (prev.supplier_id == submission.supplier_id) {
      throw Error(Errc::DuplicateSubmission, submission.supplier_id);
    }
  }
  s.submissions.push_back(std::move(submission));
  if (s.submissions.size() < quorum_.min_suppliers) return std::nullopt;
  emit(s, EventKind::ValidateUpdate);
  move(s, SessionState::Validating, EventKind::ValidateUpdate);
  return EventKind::ValidateUpdate;
}

bool SessionBook::update_validation(std::uint64_t index, SessionValidation validation,
                                    bool is_official) {
  QuerySession& s = mutable_session(index);
  if (s.state != SessionState::Validating) {
    throw Error(Errc::WrongState, "update_validation in " + std::string(state_name(s.state)));
  }
  const bool seen = std::any_of(s.regular.begin(), s.regular.end(), [&](const auto& v) {
    return v.validator_id == validation.validator_id;
  }) || (s.official && s.official->validator_id == validation.validator_id);
  if (seen || (is_official && s.official)) {
    throw Error(Errc::DuplicateValidation, validation.validator_id);
  }
  if (validation.scores.size() != s.submissions.size()) {
    throw Error(Errc::OutOfRange, "need one score per submission from " + validation.validator_id);
  }
  for (double x : validation.scores) {
    if (!(x >= 0.0 && x <= 1.0)) throw Error(Errc::OutOfRange, "score outside [0, 1]");
  }
  if (is_official) {
    if (validation.similarities.size() != s.submissions.size()) {
      throw Error(Errc::OutOfRange, "official validation needs one similarity per submission");
    }
    s.official = std::move(validation);
  } else {
    s.regular.push_back(std::move(validation));
  }
  return finalizable(index);
}

bool SessionBook::finalizable(std::uint64_t index) const {
  const QuerySession& s = session(index);
  if (s.state != SessionState::Validating) return false;
  if (s.regular.size() < quorum_.min_validators) return false;
  return s.official.has_value() || !quorum_.require_official;
}

namespace {

std::vector<std::size_t> sorted_indices_by_supplier(const std::vector<Submission>& subs) {
  std::vector<std::size_t> idx(subs.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return subs[a].supplier_id < subs[b].supplier_id;
  });
  return idx;
}

// Pays `amount` out of `from`, capped at what is left so rounding never
// overdraws the escrow.
Tokens pay(WealthLedger& wealth, const NodeId& from, const NodeId& to, Tokens amount,
           std::map<NodeId, Tokens>& payouts) {
  amount = std::min(amount, wealth.balance(from));
  if (amount <= 0.0) return 0.0;
  wealth.transfer(from, to, amount);
  payouts[to] += amount;
  return amount;
}

}  // namespace

// Step order:
//  1. flag regular validations outside the band around the official score
//  2. pick the winner by mean unflagged score (ties: smallest supplier id)
//  3. official similarity check on every submission; a failing winner
//     refunds the user and ends the session
//  4. ledger write, prompt reputation per submission, winner's validations
//  5. supplier, validator and user reputation updates, then penalties
//  6. escrow split (miss: supplier/validators/cache; hit: resale)
//  7. offer the winner to the cache
const SessionResult& SessionBook::finalize(std::uint64_t index, FinalizeContext& ctx) {
  QuerySession& s = mutable_session(index);
  if (!finalizable(index)) {
    if (s.state == SessionState::Finalized) throw Error(Errc::WrongState, "already finalized");
    throw Error(Errc::NotFinalizable, "session " + std::to_string(index));
  }
  const auto& params = ctx.params;
  Ledger& ledger = ctx.ledger;
  const std::size_t n_sub = s.submissions.size();
  const std::size_t n_val = s.regular.size();
  const bool has_official = s.official.has_value();

  std::vector<double> rv(n_val);
  for (std::size_t j = 0; j < n_val; ++j) {
    rv[j] = ledger.reputation(LedgerKey::validator(s.regular[j].validator_id));
  }
  std::vector<double> rk(n_sub);
  for (std::size_t i = 0; i < n_sub; ++i) {
    rk[i] = ledger.reputation(LedgerKey::supplier(s.submissions[i].supplier_id));
  }

  SessionResult res;

  // 1.
  std::vector<std::vector<bool>> flagged(n_val, std::vector<bool>(n_sub, false));
  if (has_official) {
    for (std::size_t j = 0; j < n_val; ++j) {
      for (std::size_t i = 0; i < n_sub; ++i) {
        const double gap = std::abs(s.regular[j].scores[i] - s.official->scores[i]);
        if (gap > params.validator_band) {
          flagged[j][i] = true;
          res.flagged_validators.insert(s.regular[j].validator_id);
        }
      }
    }
  }

  auto effective = [&](std::size_t i) {
    std::vector<ValidationRecord> out;
    for (std::size_t j = 0; j < n_val; ++j) {
      if (!flagged[j][i]) out.push_back({s.regular[j].validator_id, s.regular[j].scores[i], rv[j]});
    }
    if (has_official) out.push_back({s.official->validator_id, s.official->scores[i], 1.0});
    return out;
  };

  // 2.
  std::size_t winner = 0;
  double best = -1.0;
  for (std::size_t i : sorted_indices_by_supplier(s.submissions)) {
    const auto eff = effective(i);
    double mean = 0.0;
    for (const auto& r : eff) mean += r.score;
    if (!eff.empty()) mean /= static_cast<double>(eff.size());
    if (mean > best) {
      best = mean;
      winner = i;
    }
  }
  res.winner = winner;
  res.content = s.submissions[winner].content;

  // 3.
  std::vector<bool> failed(n_sub, false);
  if (has_official) {
    for (std::size_t i = 0; i < n_sub; ++i) {
      if (!passed(official_check(s.official->similarities[i], params))) {
        failed[i] = true;
        res.failed_suppliers.push_back(s.submissions[i].supplier_id);
      }
    }
  }

  auto apply_penalties = [&]() {
    const double factor = 1.0 - params.threshold_penalty;
    for (std::size_t i = 0; i < n_sub; ++i) {
      if (!failed[i]) continue;
      const auto key = LedgerKey::supplier(s.submissions[i].supplier_id);
      ledger.set_reputation(key, clamp01(ledger.reputation(key) * factor));
    }
    for (const auto& id : res.flagged_validators) {
      const auto key = LedgerKey::validator(id);
      ledger.set_reputation(key, clamp01(ledger.reputation(key) * factor));
    }
  };

  const NodeId escrow = s.escrow_account();
  if (failed[winner]) {
    res.outcome = Outcome::Rejected;
    res.refund = ctx.wealth.balance(escrow);
    if (res.refund > 0.0) ctx.wealth.transfer(escrow, s.user_id, res.refund);
    apply_penalties();
  } else {
    res.outcome = Outcome::Served;
    const Submission& win = s.submissions[winner];

    // 4.
    if (!*s.cache_hit) {
      res.ledger_key = ledger.put_prompt(win.content, win.supplier_id);
    } else {
      res.ledger_key = ledger.find_prompt(win.content);
    }

    double& rl = ctx.user_reputation.try_emplace(s.user_id, ledger.initial_prompt_reputation())
                     .first->second;
    const double acc = clamp01(ctx.user_accuracy ? ctx.user_accuracy(win) : win.true_quality);
    const FeedbackRecord feedback{s.user_id, acc, rl};

    res.submission_reputations.resize(n_sub);
    for (std::size_t i = 0; i < n_sub; ++i) {
      const auto eff = effective(i);
      std::span<const FeedbackRecord> fb;
      if (i == winner) fb = std::span(&feedback, 1);
      res.submission_reputations[i] = update_prompt_reputation(rk[i], eff, fb);
    }
    res.prompt_reputation = res.submission_reputations[winner];
    if (res.ledger_key) {
      const LedgerKey rep_key = res.ledger_key->paired();
      for (const auto& rec : effective(winner)) ledger.append_validation(rep_key, rec);
      ledger.set_reputation(rep_key, res.prompt_reputation);
    }

    // 5.
    for (std::size_t i = 0; i < n_sub; ++i) {
      const double rp = res.submission_reputations[i];
      ledger.set_reputation(LedgerKey::supplier(s.submissions[i].supplier_id),
                            update_supplier_reputation(rk[i], std::span(&rp, 1), params));
    }
    for (std::size_t j = 0; j < n_val; ++j) {
      std::vector<double> cs;
      for (std::size_t i = 0; i < n_sub; ++i) {
        std::vector<ValidationRecord> others;
        double rmax = rv[j];
        for (std::size_t o = 0; o < n_val; ++o) {
          if (o == j) continue;
          others.push_back({s.regular[o].validator_id, s.regular[o].scores[i], rv[o]});
          rmax = std::max(rmax, rv[o]);
        }
        if (has_official) {
          others.push_back({s.official->validator_id, s.official->scores[i], 1.0});
          rmax = 1.0;
        }
        if (rmax > 0.0) cs.push_back(consistency(s.regular[j].scores[i], others, rmax));
      }
      ledger.set_reputation(LedgerKey::validator(s.regular[j].validator_id),
                            update_validator_reputation(rv[j], cs, params));
    }
    {
      const auto eff = effective(winner);
      double rmax = 0.0;
      for (const auto& r : eff) rmax = std::max(rmax, r.validator_reputation);
      if (!eff.empty() && rmax > 0.0) {
        const double cs = consistency(acc, eff, rmax);
        rl = update_llm_reputation(rl, std::span(&cs, 1), params);
      }
    }
    apply_penalties();

    // 6.
    const auto& sh = ctx.shares;
    const Tokens escrowed = ctx.wealth.balance(escrow);
    auto pay_validators = [&](Tokens total) {
      if (n_val == 0) return;
      const Tokens each = total / static_cast<double>(n_val);
      for (const auto& v : s.regular) pay(ctx.wealth, escrow, v.validator_id, each, res.payouts);
    };
    if (!*s.cache_hit) {
      pay(ctx.wealth, escrow, win.supplier_id, escrowed * sh.supplier, res.payouts);
      pay_validators(escrowed * sh.validators);
    } else {
      pay(ctx.wealth, escrow, ctx.cache_account, escrowed * sh.cache, res.payouts);
      pay_validators(escrowed * sh.validators);
      const Tokens pool = ctx.wealth.balance(escrow);
      try {
        const auto split = distribute_resale(pool, {{win.supplier_id, res.prompt_reputation}});
        for (const auto& [id, amount] : split) pay(ctx.wealth, escrow, id, amount, res.payouts);
      } catch (const Error& e) {
        if (e.code() != Errc::AllZeroReputation) throw;
      }
    }
    pay(ctx.wealth, escrow, ctx.cache_account, ctx.wealth.balance(escrow), res.payouts);

    // 7.
    if (ctx.cache != nullptr) {
      if (!*s.cache_hit) {
        const Digest hash = sha256(win.content);
        const AccessResult ar = ctx.cache->access(hash, round_);
        if (ar.promoted) {
          CacheNode node;
          node.node_id = cache_node_id(hash, res.ledger_key ? res.ledger_key->count : 0);
          node.hash = hash;
          node.content = win.content;
          node.supplier_id = win.supplier_id;
          node.metadata = {win.embedding, s.payment, kPromptSizeUnits,
                           res.prompt_reputation};
          node.frequency = ctx.cache->config().k;
          if (ctx.cache->policy() != CachePolicy::PROCache) node.frequency = 1;
          res.evicted = ctx.cache->insert(std::move(node), round_);
          res.cache_inserted = true;
        }
      } else if (s.cache_node_id && ctx.cache->find(*s.cache_node_id) != nullptr) {
        ctx.cache->update_reputation(*s.cache_node_id, res.prompt_reputation);
      }
    }
  }

  s.result = std::move(res);
  emit(s, EventKind::SessionFinalized, s.result->outcome);
  move(s, SessionState::Finalized, EventKind::SessionFinalized);
  return *s.result;
}

void SessionBook::compact() {
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    if (it->second.state == SessionState::Finalized) {
      emitted_.erase(it->first);
      it = sessions_.erase(it);
    } else {
      ++it;
    }
  }
  transitions_.clear();
}

}  // namespace blocks
