#include <gtest/gtest.h>

#include <set>

#include "blocks/error.hpp"
#include "blocks/simulator.hpp"

using namespace blocks;

namespace {

ScenarioConfig small(std::uint32_t rounds = 40) {
  ScenarioConfig c;
  c.rounds = rounds;
  c.topics = 12;
  return c;
}

ScenarioConfig honest_only() {
  ScenarioConfig c;
  c.n_malicious_suppliers = 0;
  c.n_malicious_validators = 0;
  c.attack = StrategyKind::Honest;
  return c;
}

ScenarioConfig canonical(StrategyKind attack) {
  ScenarioConfig c;
  c.attack = attack;
  return c;
}

double malicious_mean_at(const RunResult& r, std::size_t i, Role role) {
  return role == Role::Validator ? r.frames[i].validators.malicious_mean : r.frames[i].suppliers.malicious_mean;
}

}  // namespace

TEST(Run, ZeroRounds) {
  ScenarioConfig c = small(0);
  const auto r = run(c);
  EXPECT_TRUE(r.frames.empty());
  EXPECT_EQ(r.ledger_stats.count(Prefix::DataTable), 0u);
  EXPECT_EQ(r.queries, 0u);
}

TEST(Run, InvalidConfig) {
  ScenarioConfig c = small();
  c.n_honest_suppliers = 0;
  try {
    run(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ConfigError);
  }
}

TEST(Run, FrameCompleteness) {
  const auto r = run(small());
  ASSERT_EQ(r.frames.size(), 40u);
  const auto& c = r.config;
  const std::size_t nodes = c.n_honest_suppliers + c.n_malicious_suppliers + c.n_honest_validators +
                            c.n_malicious_validators;
  std::set<NodeId> first;
  for (const auto& n : r.frames.front().nodes) first.insert(n.node_id);
  EXPECT_GE(first.size(), nodes);
  for (std::size_t i = 0; i < r.frames.size(); ++i) {
    EXPECT_EQ(r.frames[i].round, static_cast<std::int64_t>(i + 1));
    std::set<NodeId> ids;
    for (const auto& n : r.frames[i].nodes) {
      ids.insert(n.node_id);
      EXPECT_GE(n.reputation, 0.0);
      EXPECT_LE(n.reputation, 1.0);
    }
    EXPECT_EQ(ids, first);
  }
}

TEST(Run, InvariantsHold) {
  for (auto policy : {CachePolicy::PROCache, CachePolicy::LFU, CachePolicy::LRUk}) {
    ScenarioConfig c = small(60);
    c.cache_policy = policy;
    c.adversary.probe_accesses_per_round = 2;
    const auto r = run(c);
    EXPECT_TRUE(r.invariants.ok()) << policy_name(policy) << " conservation "
                                   << r.invariants.max_conservation_error;
  }
}

TEST(Run, Deterministic) {
  const auto a = run(small());
  const auto b = run(small());
  EXPECT_EQ(reputation_csv(a), reputation_csv(b));
  EXPECT_EQ(cache_metrics_csv(a), cache_metrics_csv(b));
  EXPECT_EQ(rewards_csv(a), rewards_csv(b));
  EXPECT_EQ(ledger_stats_csv(a), ledger_stats_csv(b));
  EXPECT_EQ(sessions_jsonl(a), sessions_jsonl(b));
  EXPECT_EQ(summary_json(a), summary_json(b));

  ScenarioConfig other = small();
  other.seed = 43;
  EXPECT_NE(reputation_csv(run(other)), reputation_csv(a));
}

TEST(Run, CsvHeaders) {
  const auto r = run(small(2));
  EXPECT_EQ(reputation_csv(r).substr(0, reputation_csv(r).find('\n')), "round,role,node_id,class,reputation");
  const auto cm = cache_metrics_csv(r);
  EXPECT_EQ(cm.substr(0, cm.find('\n')),
            "round,policy,hit_rate_cumulative,mean_in_cache_reputation,resident_count,"
            "evictions_cumulative,mean_service_delay");
  const auto rw = rewards_csv(r);
  EXPECT_EQ(rw.substr(0, rw.find('\n')), "round,node_id,impact,reward,balance");
}

TEST(Dedup, NoVariantsNoDedup) {
  ScenarioConfig c = honest_only();
  c.topics = 10;
  c.questions = 10;
  EXPECT_EQ(dedup_experiment(c).ledger_prompts, 10u);
}

TEST(Dedup, OneTopic) {
  ScenarioConfig c = honest_only();
  c.topics = 1;
  c.questions = 10;
  const auto d = dedup_experiment(c);
  EXPECT_EQ(d.questions_processed, 10u);
  EXPECT_EQ(d.ledger_prompts, 1u);
}

TEST(Dedup, NeedsQuestions) { EXPECT_THROW(dedup_experiment(small()), Error); }

TEST(Sweep, PolicyOverrides) {
  std::vector<SweepEntry> entries;
  for (auto p : {CachePolicy::PROCache, CachePolicy::LFU, CachePolicy::LRUk}) {
    SweepEntry e{std::string(policy_name(p)), small(10), false};
    e.config.cache_policy = p;
    entries.push_back(e);
  }
  const auto out = sweep(entries, 100, 3);
  ASSERT_EQ(out.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(out[i].label, entries[i].label);
    EXPECT_EQ(out[i].result.config.seed, 100 + i);
  }
  EXPECT_TRUE(sweep({}, 1).empty());
}

TEST(Sweep, PinnedSeedAndThreadIndependence) {
  std::vector<SweepEntry> entries{{"a", small(10), true}, {"b", small(10), true}};
  entries[0].config.seed = 9;
  entries[1].config.seed = 9;
  const auto serial = sweep(entries, 1, 1);
  const auto parallel = sweep(entries, 1, 2);
  EXPECT_EQ(serial[0].result.config.seed, 9u);
  EXPECT_EQ(reputation_csv(serial[0].result), reputation_csv(serial[1].result));
  EXPECT_EQ(reputation_csv(serial[1].result), reputation_csv(parallel[1].result));
}

TEST(Adversary, MaliciousDoesNotRecover) {
  for (auto attack : {StrategyKind::SelfPromotion, StrategyKind::Collusion, StrategyKind::Slandering}) {
    const auto r = run(canonical(attack));
    for (auto role : {Role::Supplier, Role::Validator}) {
      for (std::size_t t = 0; t + 50 < r.frames.size(); ++t) {
        EXPECT_LE(malicious_mean_at(r, t + 50, role), malicious_mean_at(r, t, role) + 0.02)
            << strategy_name(attack) << " " << role_name(role) << " round " << t + 1;
      }
    }
  }
}

TEST(Adversary, MaliciousWealthDeltaVanishes) {
  const auto r = run(canonical(StrategyKind::SelfPromotion));
  const auto last = static_cast<std::int64_t>(r.frames.size());
  std::map<NodeId, double> delta;
  for (const auto& row : r.rewards) {
    if (row.node_id.rfind("s-m", 0) == 0 && row.round > last - 10) delta[row.node_id] += row.reward;
  }
  for (const auto& [id, d] : delta) EXPECT_LT(d / 10.0, 1e-3) << id;
}

TEST(HonestOnly, SupplierReputationSettlesHigh) {
  const auto r = run(honest_only());
  ASSERT_EQ(r.frames.size(), 200u);
  for (std::size_t t = 20; t + 1 < r.frames.size(); ++t) {
    EXPECT_GE(r.frames[t + 1].suppliers.honest_mean, r.frames[t].suppliers.honest_mean - 1e-12)
        << "round " << t + 2;
  }
  EXPECT_GT(final_honest_mean(r, Role::Supplier), 0.8);
}

TEST(Summary, HasAggregates) {
  const auto r = run(small(5));
  const auto s = summary_json(r);
  for (const auto* key : {"\"ledger_prompts\"", "\"hit_rate\"", "\"config\"", "\"invariants\""}) {
    EXPECT_NE(s.find(key), std::string::npos) << key;
  }
}

TEST(Run, BrokeUsersSkipQueries) {
  ScenarioConfig c = small(10);
  c.user_endowment = 0.0;
  const auto none = run(c);
  EXPECT_EQ(none.unfunded_queries, none.queries);
  EXPECT_EQ(none.cache_hits, 0u);
  EXPECT_EQ(none.ledger_stats.count(Prefix::DataTable), 0u);
  EXPECT_EQ(none.frames.back().hit_rate, 0.0);

  c.user_endowment = 2.5;
  c.payment_per_query = 1.0;
  const auto few = run(c);
  EXPECT_GT(few.unfunded_queries, 0u);
  EXPECT_LT(few.unfunded_queries, few.queries);
  EXPECT_LE(few.invariants.max_conservation_error, 1e-9);
  for (const auto& n : few.frames.back().nodes) {
    if (n.role == Role::User) EXPECT_GE(n.balance, 0.0);
  }
}
