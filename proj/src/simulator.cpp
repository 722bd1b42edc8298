#include "blocks/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "blocks/config.hpp"
#include "blocks/error.hpp"
#include "blocks/sha256.hpp"
#include "json.hpp"

namespace blocks {

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

void ScenarioConfig::validate() const {
  if (n_honest_suppliers < 1) throw Error(Errc::ConfigError, "n_honest_suppliers must be >= 1");
  if (n_honest_validators < 1) throw Error(Errc::ConfigError, "n_honest_validators must be >= 1");
  if (n_users < 1) throw Error(Errc::ConfigError, "n_users must be >= 1");
  if (n_malicious_users > n_users) throw Error(Errc::ConfigError, "n_malicious_users exceeds n_users");
  if (topics < 1) throw Error(Errc::ConfigError, "topics must be >= 1");
  if (variants_per_topic < 1) throw Error(Errc::ConfigError, "variants_per_topic must be >= 1");
  if (queries_per_round < 1) throw Error(Errc::ConfigError, "queries_per_round must be >= 1");
  if (!(payment_per_query > 0.0)) throw Error(Errc::ConfigError, "payment_per_query must be > 0");
  if (!(user_endowment >= 0.0)) throw Error(Errc::ConfigError, "user_endowment must be >= 0");
  if (!(initial_reputation >= 0.0 && initial_reputation <= 1.0)) {
    throw Error(Errc::ConfigError, "initial_reputation must be in [0, 1]");
  }
  if (!(d_hit >= 0.0 && d_miss >= 0.0)) throw Error(Errc::ConfigError, "delays must be >= 0");
  if (n_honest_suppliers + n_malicious_suppliers < quorum.min_suppliers) {
    throw Error(Errc::ConfigError, "fewer suppliers than quorum.min_suppliers");
  }
  const std::uint32_t n_val = n_honest_validators + n_malicious_validators;
  const std::uint32_t sample = quorum.validator_sample_size == 0 ? n_val : quorum.validator_sample_size;
  if (sample > n_val) throw Error(Errc::ConfigError, "quorum.validator_sample_size exceeds validators");
  if (sample < quorum.min_validators) {
    throw Error(Errc::ConfigError, "validators per session below quorum.min_validators");
  }
  if (attack == StrategyKind::Collusion &&
      n_malicious_suppliers + n_malicious_validators > 0 &&
      n_malicious_suppliers + n_malicious_validators < 2) {
    throw Error(Errc::ConfigError, "a collusion group needs at least 2 members");
  }
  reputation.validate();
  reward.validate();
  cache.validate();
  quorum.validate();
  quality.validate();
  escrow.validate();
  if (embedding.dim < 2) throw Error(Errc::ConfigError, "embedding.dim must be >= 2");
  if (!(embedding.variant_noise >= 0.0)) throw Error(Errc::ConfigError, "embedding.variant_noise must be >= 0");
}

namespace {

std::string node_name(char role, bool malicious, std::uint32_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c-%c%02u", role, malicious ? 'm' : 'h', i);
  return buf;
}

RoleSummary summarize(const std::vector<NodeFrame>& nodes, Role role) {
  std::vector<double> honest;
  std::vector<double> bad;
  for (const auto& n : nodes) {
    if (n.role != role) continue;
    (n.malicious ? bad : honest).push_back(n.reputation);
  }
  RoleSummary s;
  if (!honest.empty()) {
    s.honest_mean = std::accumulate(honest.begin(), honest.end(), 0.0) / honest.size();
    if (honest.size() > 1) {
      double ss = 0.0;
      for (double x : honest) ss += (x - s.honest_mean) * (x - s.honest_mean);
      const double sd = std::sqrt(ss / static_cast<double>(honest.size() - 1));
      s.honest_ci = 1.96 * sd / std::sqrt(static_cast<double>(honest.size()));
    }
  }
  if (!bad.empty()) s.malicious_mean = std::accumulate(bad.begin(), bad.end(), 0.0) / bad.size();
  return s;
}

struct Archived {
  std::string content;
  NodeId supplier;
  Embedding embedding;
  double quality = 0.0;
  double reputation = 0.0;
  Tokens cost = 0.0;
};

class Engine {
 public:
  explicit Engine(const ScenarioConfig& cfg)
      : cfg_(cfg),
        space_(cfg.topics, cfg.embedding.dim, cfg.embedding.variant_noise, cfg.seed),
        ledger_(cfg.initial_reputation),
        cache_(make_cache(cfg.cache_policy, cfg.cache)),
        book_(cfg.quorum),
        workload_rng_(stream_seed(cfg.seed, 0xa11)),
        supplier_rng_(stream_seed(cfg.seed, 0xa12)),
        validator_rng_(stream_seed(cfg.seed, 0xa13)) {
    build_agents();
  }

  RunResult run();

 private:
  void build_agents();
  void run_query(std::int64_t round, std::uint32_t topic, std::uint32_t variant);
  void probe(std::int64_t round);
  void settle(std::int64_t round);
  void refresh_cache();
  MetricsFrame frame(std::int64_t round) const;
  void check_round();
  void count_access(const NodeId& supplier, double prompt_rep) {
    ++prompt_acc_[supplier];
    payout_[supplier] += prompt_rep;
  }
  CacheNode node_from_archive(const Digest& hash, const Archived& a) const;

  const ScenarioConfig& cfg_;
  TopicSpace space_;
  Ledger ledger_;
  WealthLedger wealth_;
  std::unique_ptr<KnowledgeCache> cache_;
  SessionBook book_;
  std::mt19937_64 workload_rng_;
  std::mt19937_64 supplier_rng_;
  std::mt19937_64 validator_rng_;

  std::vector<Agent> suppliers_;
  std::vector<Agent> validators_;
  std::vector<Agent> users_;
  std::unique_ptr<Agent> official_;
  std::map<NodeId, double> user_rep_;

  std::map<Digest, Archived> archive_;
  std::map<NodeId, std::vector<Digest>> own_prompts_;
  std::map<NodeId, std::size_t> probe_cursor_;
  std::vector<std::uint32_t> next_variant_;

  std::map<NodeId, std::uint64_t> prompt_acc_;
  std::map<NodeId, std::uint64_t> val_acc_;
  std::map<NodeId, Tokens> payout_;

  RunResult out_;
  std::uint64_t queries_ = 0;
  std::uint64_t hits_ = 0;
  double delay_total_ = 0.0;
};

void Engine::build_agents() {
  const StrategyKind attack = cfg_.attack;
  std::set<NodeId> bad_suppliers;
  std::set<NodeId> honest_suppliers;
  for (std::uint32_t i = 0; i < cfg_.n_malicious_suppliers; ++i) bad_suppliers.insert(node_name('s', true, i));
  for (std::uint32_t i = 0; i < cfg_.n_honest_suppliers; ++i) honest_suppliers.insert(node_name('s', false, i));

  std::set<NodeId> group = bad_suppliers;
  for (std::uint32_t i = 0; i < cfg_.n_malicious_validators; ++i) group.insert(node_name('v', true, i));

  auto strategy_for = [&](const NodeId& own_supplier) {
    Strategy st;
    st.kind = attack;
    switch (attack) {
      case StrategyKind::Honest: break;
      case StrategyKind::SelfPromotion:
        if (bad_suppliers.contains(own_supplier)) st.affiliates.insert(own_supplier);
        break;
      case StrategyKind::Collusion: st.affiliates = group; break;
      case StrategyKind::Slandering: st.targets = honest_suppliers; break;
    }
    return st;
  };

  std::uint64_t stream = 1;
  for (std::uint32_t i = 0; i < cfg_.n_honest_suppliers; ++i) {
    suppliers_.emplace_back(AgentSpec{node_name('s', false, i), Role::Supplier, {}, stream++}, cfg_.seed);
  }
  for (std::uint32_t i = 0; i < cfg_.n_malicious_suppliers; ++i) {
    const NodeId id = node_name('s', true, i);
    suppliers_.emplace_back(AgentSpec{id, Role::Supplier, strategy_for(id), stream++, true}, cfg_.seed);
  }
  for (std::uint32_t i = 0; i < cfg_.n_honest_validators; ++i) {
    validators_.emplace_back(AgentSpec{node_name('v', false, i), Role::Validator, {}, stream++}, cfg_.seed);
  }
  for (std::uint32_t i = 0; i < cfg_.n_malicious_validators; ++i) {
    validators_.emplace_back(
        AgentSpec{node_name('v', true, i), Role::Validator, strategy_for(node_name('s', true, i)), stream++, true},
        cfg_.seed);
  }
  for (std::uint32_t i = 0; i < cfg_.n_users; ++i) {
    const bool bad = i >= cfg_.n_users - cfg_.n_malicious_users;
    users_.emplace_back(AgentSpec{node_name('u', bad, i), Role::User, {}, stream++, bad}, cfg_.seed);
  }
  official_ = std::make_unique<Agent>(AgentSpec{"v-official", Role::OfficialValidator, {}, stream++},
                                      cfg_.seed);

  for (const auto& a : suppliers_) ledger_.register_node(Prefix::ReputationSupplier, a.id(), cfg_.initial_reputation);
  for (const auto& a : validators_) ledger_.register_node(Prefix::ReputationValidator, a.id(), cfg_.initial_reputation);
  for (const auto& u : users_) {
    book_.register_user(u.id());
    wealth_.endow(u.id(), cfg_.user_endowment);
    user_rep_[u.id()] = cfg_.initial_reputation;
  }
  next_variant_.assign(cfg_.topics, 0);
}

CacheNode Engine::node_from_archive(const Digest& hash, const Archived& a) const {
  CacheNode node;
  const auto key = ledger_.find_prompt(a.content);
  node.node_id = cache_node_id(hash, key ? key->count : 0);
  node.hash = hash;
  node.content = a.content;
  node.supplier_id = a.supplier;
  node.metadata = {a.embedding, a.cost, kPromptSizeUnits, a.reputation};
  node.frequency = cache_->policy() == CachePolicy::PROCache ? cache_->config().k : 1;
  return node;
}

void Engine::run_query(std::int64_t round, std::uint32_t topic, std::uint32_t variant) {
  Agent& user = users_[queries_ % users_.size()];
  ++queries_;
  if (wealth_.balance(user.id()) < cfg_.payment_per_query) {
    ++out_.unfunded_queries;
    return;
  }

  Query query;
  query.text = "question on topic " + std::to_string(topic) + ", variant " + std::to_string(variant);
  query.topic_id = topic;
  query.variant_id = variant;
  query.embedding = space_.variant(topic, variant);

  const std::size_t prompts_before = ledger_.stats().count(Prefix::DataTable);
  const auto idx = book_.create_session(user.id(), query, cfg_.payment_per_query, wealth_);

  const auto found = cache_->retrieve(query.embedding, cfg_.cache.similarity_threshold);
  if (found) {
    const CacheNode& node = *found->node;
    Submission sub{node.supplier_id, node.content, node.metadata.embedding, 0.0};
    const std::string node_id = node.node_id;
    const Digest hash = node.hash;
    if (auto it = archive_.find(hash); it != archive_.end()) sub.true_quality = it->second.quality;
    cache_->access(hash, round);
    count_access(sub.supplier_id, cache_->find(node_id)->metadata.reputation);
    ++hits_;
    delay_total_ += cfg_.d_hit;
    book_.post_cache(idx, std::move(sub), node_id);
  } else {
    delay_total_ += cfg_.d_miss;
    book_.post_cache(idx, std::nullopt);
    std::vector<std::size_t> order(suppliers_.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), supplier_rng_);
    for (std::size_t k = 0; k < cfg_.quorum.min_suppliers; ++k) {
      book_.update_knowledge(idx, supply(suppliers_[order[k]], cfg_.quality, query, space_));
    }
  }

  const auto& subs = book_.session(idx).submissions;
  std::vector<std::size_t> vorder(validators_.size());
  std::iota(vorder.begin(), vorder.end(), 0);
  std::size_t n_sample = validators_.size();
  if (cfg_.quorum.validator_sample_size != 0) {
    std::shuffle(vorder.begin(), vorder.end(), validator_rng_);
    n_sample = cfg_.quorum.validator_sample_size;
    std::sort(vorder.begin(), vorder.begin() + static_cast<std::ptrdiff_t>(n_sample));
  }
  for (std::size_t k = 0; k < n_sample; ++k) {
    Agent& v = validators_[vorder[k]];
    SessionValidation val{v.id(), {}, {}};
    for (const auto& sub : subs) val.scores.push_back(validate(v, cfg_.quality, sub));
    ++val_acc_[v.id()];
    book_.update_validation(idx, std::move(val), false);
  }
  if (cfg_.quorum.require_official) {
    SessionValidation val{official_->id(), {}, {}};
    for (const auto& sub : subs) {
      val.scores.push_back(validate(*official_, cfg_.quality, sub));
      val.similarities.push_back(official_similarity(sub.embedding, space_.topic(topic)));
    }
    book_.update_validation(idx, std::move(val), true);
  }

  FinalizeContext ctx{ledger_,       wealth_, cache_.get(), cfg_.reputation, cfg_.escrow, "cache",
                      round,         user_rep_,
                      [&](const Submission& s) { return user_feedback(user, cfg_.quality, s.true_quality); }};
  const bool was_hit = *book_.session(idx).cache_hit;
  const SessionResult& res = book_.finalize(idx, ctx);

  Tokens paid = res.refund;
  for (const auto& [_, amount] : res.payouts) paid += amount;
  out_.invariants.max_escrow_error =
      std::max(out_.invariants.max_escrow_error, std::abs(cfg_.payment_per_query - paid));
  const std::size_t prompts_after = ledger_.stats().count(Prefix::DataTable);
  if (prompts_after != prompts_before && (was_hit || res.outcome != Outcome::Served)) {
    ++out_.invariants.ledger_growth_violations;
  }

  if (res.outcome == Outcome::Rejected) {
    ++out_.rejected_sessions;
    return;
  }
  const auto& session = book_.session(idx);
  for (std::size_t i = 0; i < session.submissions.size(); ++i) {
    const Submission& sub = session.submissions[i];
    const Digest hash = sha256(sub.content);
    auto [it, inserted] = archive_.try_emplace(hash);
    Archived& a = it->second;
    if (inserted) {
      a.content = sub.content;
      a.supplier = sub.supplier_id;
      a.embedding = sub.embedding;
      a.cost = cfg_.payment_per_query;
      own_prompts_[sub.supplier_id].push_back(hash);
    }
    a.quality = sub.true_quality;
    a.reputation = res.submission_reputations[i];
  }
  if (!was_hit) count_access(session.submissions[res.winner].supplier_id, res.prompt_reputation);
}

void Engine::probe(std::int64_t round) {
  const std::uint32_t n = cfg_.adversary.probe_accesses_per_round;
  if (n == 0) return;
  for (const auto& s : suppliers_) {
    if (!s.malicious()) continue;
    auto own = own_prompts_.find(s.id());
    if (own == own_prompts_.end() || own->second.empty()) continue;
    std::size_t& cursor = probe_cursor_[s.id()];
    for (std::uint32_t p = 0; p < n; ++p) {
      const Digest& hash = own->second[cursor++ % own->second.size()];
      const Archived& a = archive_.at(hash);
      count_access(s.id(), a.reputation);
      const AccessResult ar = cache_->access(hash, round);
      if (ar.promoted) cache_->insert(node_from_archive(hash, a), round);
    }
  }
}

void Engine::settle(std::int64_t round) {
  std::vector<ImpactRecord> records;
  for (const auto& a : suppliers_) {
    records.push_back({a.id(), prompt_acc_[a.id()], 0, ledger_.reputation(LedgerKey::supplier(a.id()))});
  }
  for (const auto& a : validators_) {
    records.push_back({a.id(), 0, val_acc_[a.id()], ledger_.reputation(LedgerKey::validator(a.id()))});
  }
  std::map<NodeId, Tokens> payouts;
  for (const auto& [id, amount] : payout_) {
    if (amount > 0.0) payouts[id] = amount;
  }
  std::vector<SettlementLine> lines;
  wealth_ = settle_round(std::move(wealth_), records, payouts, cfg_.reward, &lines);
  for (const auto& line : lines) {
    out_.rewards.push_back({round, line.node_id, line.impact, line.reward + line.payout,
                            wealth_.balance(line.node_id)});
  }
  prompt_acc_.clear();
  val_acc_.clear();
  payout_.clear();
}

void Engine::refresh_cache() {
  for (const CacheNode* node : cache_->residents()) {
    double rep = node->metadata.reputation;
    if (const auto key = ledger_.find_prompt(node->content)) {
      rep = ledger_.reputation(key->paired());
    } else if (auto it = archive_.find(node->hash); it != archive_.end()) {
      rep = it->second.reputation;
    }
    if (rep != node->metadata.reputation) cache_->update_reputation(node->node_id, rep);
  }
}

MetricsFrame Engine::frame(std::int64_t round) const {
  MetricsFrame f;
  f.round = round;
  for (const auto& a : suppliers_) {
    f.nodes.push_back({a.id(), Role::Supplier, a.malicious(),
                       ledger_.reputation(LedgerKey::supplier(a.id())), wealth_.balance(a.id())});
  }
  for (const auto& a : validators_) {
    f.nodes.push_back({a.id(), Role::Validator, a.malicious(),
                       ledger_.reputation(LedgerKey::validator(a.id())), wealth_.balance(a.id())});
  }
  for (const auto& u : users_) {
    f.nodes.push_back({u.id(), Role::User, u.malicious(), user_rep_.at(u.id()), wealth_.balance(u.id())});
  }
  f.suppliers = summarize(f.nodes, Role::Supplier);
  f.validators = summarize(f.nodes, Role::Validator);
  const std::uint64_t served = queries_ - out_.unfunded_queries;
  f.hit_rate = served == 0 ? 0.0 : static_cast<double>(hits_) / static_cast<double>(served);
  f.mean_in_cache_reputation = cache_->mean_reputation();
  f.resident_count = cache_->size();
  f.evictions = cache_->evictions();
  f.mean_service_delay = served == 0 ? 0.0 : delay_total_ / static_cast<double>(served);
  f.ledger_prompts = ledger_.stats().count(Prefix::DataTable);
  return f;
}

void Engine::check_round() {
  const double drift = std::abs(wealth_.total_balance() - wealth_.total_endowed() - wealth_.total_minted());
  out_.invariants.max_conservation_error = std::max(out_.invariants.max_conservation_error, drift);

  for (const auto& t : book_.transitions()) {
    if (!allowed_transition(t.from, t.to)) ++out_.invariants.illegal_transitions;
    out_.session_log.push_back({t.round, t.session_index, t.from, t.to, t.event});
  }
  std::set<std::pair<std::uint64_t, EventKind>> seen;
  while (auto e = book_.poll_event()) {
    if (!seen.insert({e->session_index, e->kind}).second) ++out_.invariants.duplicate_events;
  }
  book_.compact();
}

RunResult Engine::run() {
  const auto start = std::chrono::steady_clock::now();
  out_.config = cfg_;
  std::uniform_int_distribution<std::uint32_t> pick_topic(0, cfg_.topics - 1);

  const bool fixed = cfg_.questions > 0;
  for (std::uint32_t r = 1; r <= cfg_.rounds; ++r) {
    if (fixed && queries_ >= cfg_.questions) break;
    book_.set_round(r);
    for (std::uint32_t q = 0; q < cfg_.queries_per_round; ++q) {
      if (fixed) {
        if (queries_ >= cfg_.questions) break;
        const auto i = static_cast<std::uint32_t>(queries_);
        run_query(r, i % cfg_.topics, i / cfg_.topics);
      } else {
        const std::uint32_t t = pick_topic(workload_rng_);
        const std::uint32_t v = next_variant_[t]++ % cfg_.variants_per_topic;
        run_query(r, t, v);
      }
    }
    probe(r);
    settle(r);
    refresh_cache();
    check_round();
    out_.frames.push_back(frame(r));
  }

  out_.queries = queries_;
  out_.cache_hits = hits_;
  out_.ledger_stats = ledger_.stats();
  out_.ledger_json = ledger_.snapshot_json(2);
  out_.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return std::move(out_);
}

}  // namespace

RunResult run(const ScenarioConfig& config) {
  config.validate();
  Engine engine(config);
  return engine.run();
}

std::vector<SweepOutput> sweep(std::vector<SweepEntry> entries, std::uint64_t base_seed,
                               unsigned threads) {
  std::vector<SweepOutput> out(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!entries[i].seed_pinned) entries[i].config.seed = base_seed + i;
    entries[i].config.validate();
    out[i].label = entries[i].label;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      try {
        out[i].result = run(entries[i].config);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(entries.size())));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

DedupReport dedup_report(const RunResult& result) {
  DedupReport rep;
  rep.questions_processed = result.queries;
  rep.ledger_prompts = result.ledger_stats.count(Prefix::DataTable);
  if (rep.questions_processed > 0) {
    rep.reduction = 1.0 - static_cast<double>(rep.ledger_prompts) /
                              static_cast<double>(rep.questions_processed);
  }
  return rep;
}

DedupReport dedup_experiment(const ScenarioConfig& config) {
  if (config.questions == 0) throw Error(Errc::ConfigError, "questions must be > 0 for the dedup experiment");
  ScenarioConfig cfg = config;
  const std::uint32_t needed = (cfg.questions + cfg.queries_per_round - 1) / cfg.queries_per_round;
  cfg.rounds = std::max(cfg.rounds, needed);
  return dedup_report(run(cfg));
}

namespace {

template <class Pick>
std::vector<double> series(const RunResult& r, Pick pick) {
  std::vector<double> out;
  out.reserve(r.frames.size());
  for (const auto& f : r.frames) out.push_back(pick(f));
  return out;
}

const RoleSummary& role_summary(const MetricsFrame& f, Role role) {
  return role == Role::Validator ? f.validators : f.suppliers;
}

}  // namespace

double final_honest_mean(const RunResult& r, Role role) {
  return r.frames.empty() ? 0.0 : role_summary(r.frames.back(), role).honest_mean;
}

double final_malicious_mean(const RunResult& r, Role role) {
  return r.frames.empty() ? 0.0 : role_summary(r.frames.back(), role).malicious_mean;
}

double honest_tail_sd(const RunResult& r, Role role, std::size_t last_n) {
  auto xs = series(r, [&](const MetricsFrame& f) { return role_summary(f, role).honest_mean; });
  if (xs.size() > last_n) xs.erase(xs.begin(), xs.end() - static_cast<std::ptrdiff_t>(last_n));
  if (xs.empty()) return 0.0;
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

std::string reputation_csv(const RunResult& r) {
  std::ostringstream os;
  os << "round,role,node_id,class,reputation\n";
  for (const auto& f : r.frames) {
    for (const auto& n : f.nodes) {
      os << f.round << ',' << role_name(n.role) << ',' << n.node_id << ','
         << (n.malicious ? "malicious" : "honest") << ',' << fmt_double(n.reputation) << '\n';
    }
  }
  return os.str();
}

std::string cache_metrics_csv(const RunResult& r) {
  std::ostringstream os;
  os << "round,policy,hit_rate_cumulative,mean_in_cache_reputation,resident_count,"
        "evictions_cumulative,mean_service_delay\n";
  const auto policy = policy_name(r.config.cache_policy);
  for (const auto& f : r.frames) {
    os << f.round << ',' << policy << ',' << fmt_double(f.hit_rate) << ','
       << fmt_double(f.mean_in_cache_reputation) << ',' << f.resident_count << ',' << f.evictions
       << ',' << fmt_double(f.mean_service_delay) << '\n';
  }
  return os.str();
}

std::string rewards_csv(const RunResult& r) {
  std::ostringstream os;
  os << "round,node_id,impact,reward,balance\n";
  for (const auto& row : r.rewards) {
    os << row.round << ',' << row.node_id << ',' << fmt_double(row.impact) << ','
       << fmt_double(row.reward) << ',' << fmt_double(row.balance) << '\n';
  }
  return os.str();
}

std::string ledger_stats_csv(const RunResult& r) {
  std::ostringstream os;
  os << "metric,value\n";
  for (Prefix p : kAllPrefixes) os << prefix_name(p) << ',' << r.ledger_stats.count(p) << '\n';
  os << "total_prompt_bytes," << r.ledger_stats.total_prompt_bytes << '\n';
  return os.str();
}

std::string sessions_jsonl(const RunResult& r) {
  std::ostringstream os;
  for (const auto& row : r.session_log) {
    nlohmann::ordered_json j{{"round", row.round},
                             {"session_index", row.session_index},
                             {"from", state_name(row.from)},
                             {"to", state_name(row.to)},
                             {"event", event_name(row.event)}};
    os << j.dump() << '\n';
  }
  return os.str();
}

std::string summary_json(const RunResult& r) {
  auto role_json = [&](Role role) {
    return nlohmann::ordered_json{{"honest_mean", final_honest_mean(r, role)},
                                  {"honest_ci", r.frames.empty() ? 0.0 : role_summary(r.frames.back(), role).honest_ci},
                                  {"malicious_mean", final_malicious_mean(r, role)},
                                  {"honest_sd_last_50", honest_tail_sd(r, role, 50)}};
  };
  const DedupReport dedup = dedup_report(r);
  nlohmann::ordered_json j;
  j["seed"] = r.config.seed;
  j["rounds_run"] = r.frames.size();
  j["attack"] = strategy_name(r.config.attack);
  j["cache_policy"] = policy_name(r.config.cache_policy);
  j["questions_processed"] = dedup.questions_processed;
  j["ledger_prompts"] = dedup.ledger_prompts;
  j["storage_reduction"] = dedup.reduction;
  j["cache_hits"] = r.cache_hits;
  j["hit_rate"] = r.frames.empty() ? 0.0 : r.frames.back().hit_rate;
  j["mean_in_cache_reputation"] = r.frames.empty() ? 0.0 : r.frames.back().mean_in_cache_reputation;
  j["mean_service_delay"] = r.frames.empty() ? 0.0 : r.frames.back().mean_service_delay;
  j["rejected_sessions"] = r.rejected_sessions;
  j["unfunded_queries"] = r.unfunded_queries;
  j["suppliers"] = role_json(Role::Supplier);
  j["validators"] = role_json(Role::Validator);
  j["invariants"] = {{"max_conservation_error", r.invariants.max_conservation_error},
                     {"max_escrow_error", r.invariants.max_escrow_error},
                     {"illegal_transitions", r.invariants.illegal_transitions},
                     {"duplicate_events", r.invariants.duplicate_events},
                     {"ledger_growth_violations", r.invariants.ledger_growth_violations}};
  j["config"] = config_to_json(r.config);
  return j.dump(2) + "\n";
}

void write_outputs(const RunResult& r, const std::filesystem::path& dir, bool force,
                   bool dump_ledger) {
  std::vector<std::pair<std::string, std::string>> files{
      {"reputation_timeseries.csv", reputation_csv(r)},
      {"cache_metrics.csv", cache_metrics_csv(r)},
      {"rewards.csv", rewards_csv(r)},
      {"ledger_stats.csv", ledger_stats_csv(r)},
      {"sessions.jsonl", sessions_jsonl(r)},
      {"summary.json", summary_json(r)},
  };
  if (dump_ledger) files.emplace_back("ledger.json", r.ledger_json + "\n");

  std::filesystem::create_directories(dir);
  if (!force) {
    for (const auto& [name, _] : files) {
      if (std::filesystem::exists(dir / name)) {
        throw Error(Errc::OutputExists, (dir / name).string() + " exists (use --force)");
      }
    }
  }
  for (const auto& [name, body] : files) {
    std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
    f << body;
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
  }
}

}  // namespace blocks
