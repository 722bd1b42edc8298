#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blocks/session.hpp"
#include "blocks/types.hpp"

namespace blocks {

enum class Role { User, CacheService, Supplier, Validator, OfficialValidator };
std::string_view role_name(Role r) noexcept;

enum class StrategyKind { Honest, SelfPromotion, Collusion, Slandering };
std::string_view strategy_name(StrategyKind k) noexcept;
std::optional<StrategyKind> parse_strategy(std::string_view name) noexcept;

struct Strategy {
  StrategyKind kind = StrategyKind::Honest;
  /// SelfPromotion: the supplier identities this node operates.
  /// Collusion: every member of the group, this node included.
  std::set<NodeId> affiliates;
  /// Slandering: suppliers whose submissions get scored 0.
  std::set<NodeId> targets;

  bool malicious() const { return kind != StrategyKind::Honest; }
};

struct AgentSpec {
  NodeId node_id;
  Role role = Role::User;
  Strategy strategy;
  std::uint64_t rng_stream = 0;
  /// Byzantine node even under the Honest strategy (low-quality supply).
  bool malicious = false;
};

struct QualityModel {
  double mu_honest = 0.85;
  double mu_malicious = 0.2;
  double sigma_supply = 0.05;
  double sigma_validate = 0.05;
  /// Chance a malicious submission is off-topic (injected).
  double p_inject = 0.5;

  void validate() const;
};

/// splitmix64 finaliser; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// Fixed unit vector per topic plus seeded, renormalised variants of it.
class TopicSpace {
 public:
  TopicSpace(std::uint32_t topics, std::uint32_t dim, double variant_noise, std::uint64_t seed);

  std::uint32_t topics() const { return static_cast<std::uint32_t>(vectors_.size()); }
  std::uint32_t dim() const { return dim_; }
  const Embedding& topic(std::uint32_t t) const { return vectors_.at(t); }

  /// normalize(u_t + noise * g / sqrt(d)); variant 0 is u_t itself.
  Embedding variant(std::uint32_t t, std::uint32_t v) const;

  /// A unit vector orthogonal to u_t.
  Embedding off_topic(std::uint32_t t, std::mt19937_64& rng) const;

 private:
  std::uint32_t dim_;
  double noise_;
  std::uint64_t seed_;
  std::vector<Embedding> vectors_;
};

Embedding random_unit(std::uint32_t dim, std::mt19937_64& rng);
void normalize(Embedding& v);

/// A node with its own random stream.
class Agent {
 public:
  explicit Agent(AgentSpec spec, std::uint64_t seed);

  const AgentSpec& spec() const { return spec_; }
  const NodeId& id() const { return spec_.node_id; }
  bool malicious() const { return spec_.malicious || spec_.strategy.malicious(); }
  std::mt19937_64& rng() { return rng_; }

  double normal(double mean, double sigma);
  double uniform();

 private:
  AgentSpec spec_;
  std::mt19937_64 rng_;
};

/// Content string an honest supplier returns for a topic. Identical across
/// honest suppliers so the ledger can deduplicate it.
std::string canonical_content(std::uint32_t topic);

Submission supply(Agent& agent, const QualityModel& model, const Query& query,
                  const TopicSpace& space);

/// Score in [0, 1] for one submission.
double validate(Agent& agent, const QualityModel& model, const Submission& submission);

/// Accuracy the user reports; malicious users invert it.
double user_feedback(Agent& agent, const QualityModel& model, double quality);

/// Dot product of the submission embedding with the query's topic vector.
double official_similarity(std::span<const double> submission_embedding,
                           std::span<const double> topic_vector);

}  // namespace blocks
