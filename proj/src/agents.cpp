#include "blocks/agents.hpp"

#include <cmath>

#include "blocks/error.hpp"

namespace blocks {

std::string_view role_name(Role r) noexcept {
  switch (r) {
    case Role::User: return "User";
    case Role::CacheService: return "CacheService";
    case Role::Supplier: return "Supplier";
    case Role::Validator: return "Validator";
    case Role::OfficialValidator: return "OfficialValidator";
  }
  return "?";
}

std::string_view strategy_name(StrategyKind k) noexcept {
  switch (k) {
    case StrategyKind::Honest: return "Honest";
    case StrategyKind::SelfPromotion: return "SelfPromotion";
    case StrategyKind::Collusion: return "Collusion";
    case StrategyKind::Slandering: return "Slandering";
  }
  return "?";
}

std::optional<StrategyKind> parse_strategy(std::string_view name) noexcept {
  for (auto k : {StrategyKind::Honest, StrategyKind::SelfPromotion, StrategyKind::Collusion,
                 StrategyKind::Slandering}) {
    if (name == strategy_name(k)) return k;
  }
  return std::nullopt;
}

void QualityModel::validate() const {
  if (!(mu_honest > mu_malicious)) throw Error(Errc::ConfigError, "quality.mu_honest must exceed mu_malicious");
  if (!(sigma_supply >= 0.0) || !(sigma_validate >= 0.0)) {
    throw Error(Errc::ConfigError, "quality sigmas must be >= 0");
  }
  if (!(p_inject >= 0.0 && p_inject <= 1.0)) throw Error(Errc::ConfigError, "quality.p_inject must be in [0, 1]");
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

void normalize(Embedding& v) {
  const double n = norm(v);
  if (!(n > 0.0)) throw Error(Errc::BadEmbedding, "cannot normalise a zero vector");
  for (double& x : v) x /= n;
}

Embedding random_unit(std::uint32_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Embedding v(dim);
  do {
    for (double& x : v) x = g(rng);
  } while (norm(v) < 1e-12);
  normalize(v);
  return v;
}

TopicSpace::TopicSpace(std::uint32_t topics, std::uint32_t dim, double variant_noise,
                       std::uint64_t seed)
    : dim_(dim), noise_(variant_noise), seed_(seed) {
  if (dim < 2) throw Error(Errc::ConfigError, "embedding.dim must be >= 2");
  std::mt19937_64 rng(stream_seed(seed, 0x70b1c));
  vectors_.reserve(topics);
  for (std::uint32_t t = 0; t < topics; ++t) vectors_.push_back(random_unit(dim, rng));
}

Embedding TopicSpace::variant(std::uint32_t t, std::uint32_t v) const {
  Embedding e = topic(t);
  if (v == 0 || noise_ == 0.0) return e;
  std::mt19937_64 rng(stream_seed(seed_, (std::uint64_t{t} << 32) | v));
  std::normal_distribution<double> g(0.0, 1.0);
  const double scale = noise_ / std::sqrt(static_cast<double>(dim_));
  for (double& x : e) x += scale * g(rng);
  normalize(e);
  return e;
}

Embedding TopicSpace::off_topic(std::uint32_t t, std::mt19937_64& rng) const {
  const Embedding& u = topic(t);
  for (;;) {
    Embedding e = random_unit(dim_, rng);
    const double d = dot(e, u);
    for (std::size_t i = 0; i < e.size(); ++i) e[i] -= d * u[i];
    if (norm(e) > 1e-6) {
      normalize(e);
      return e;
    }
  }
}

Agent::Agent(AgentSpec spec, std::uint64_t seed)
    : spec_(std::move(spec)), rng_(stream_seed(seed, spec_.rng_stream)) {}

double Agent::normal(double mean, double sigma) {
  if (sigma == 0.0) return mean;
  return std::normal_distribution<double>(mean, sigma)(rng_);
}

double Agent::uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }

std::string canonical_content(std::uint32_t topic) {
  return "Knowledge for topic " + std::to_string(topic) + ": verified reference answer.";
}

Submission supply(Agent& agent, const QualityModel& model, const Query& query,
                  const TopicSpace& space) {
  Submission sub;
  sub.supplier_id = agent.id();
  if (!agent.malicious()) {
    sub.true_quality = clamp01(agent.normal(model.mu_honest, model.sigma_supply));
    sub.content = canonical_content(query.topic_id);
    sub.embedding = space.topic(query.topic_id);
    return sub;
  }
  sub.true_quality = clamp01(agent.normal(model.mu_malicious, model.sigma_supply));
  sub.content = "Knowledge for topic " + std::to_string(query.topic_id) + " from " + agent.id() + ".";
  if (agent.uniform() < model.p_inject) {
    sub.content += " [injected]";
    sub.embedding = space.off_topic(query.topic_id, agent.rng());
  } else {
    sub.embedding = space.topic(query.topic_id);
  }
  return sub;
}

double validate(Agent& agent, const QualityModel& model, const Submission& submission) {
  const double honest = clamp01(submission.true_quality + agent.normal(0.0, model.sigma_validate));
  const Strategy& st = agent.spec().strategy;
  switch (st.kind) {
    case StrategyKind::Honest: return honest;
    case StrategyKind::SelfPromotion:
    case StrategyKind::Collusion:
      return st.affiliates.contains(submission.supplier_id) ? 1.0 : honest;
    case StrategyKind::Slandering: return st.targets.contains(submission.supplier_id) ? 0.0 : honest;
  }
  return honest;
}

double user_feedback(Agent& agent, const QualityModel& model, double quality) {
  const double acc = clamp01(quality + agent.normal(0.0, model.sigma_validate));
  return agent.malicious() ? 1.0 - acc : acc;
}

double official_similarity(std::span<const double> submission_embedding,
                           std::span<const double> topic_vector) {
  if (!is_unit(submission_embedding) || !is_unit(topic_vector)) {
    throw Error(Errc::BadEmbedding, "official similarity needs unit vectors");
  }
  return dot(submission_embedding, topic_vector);
}

}  // namespace blocks
