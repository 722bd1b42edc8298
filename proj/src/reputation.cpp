#include "blocks/reputation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "blocks/error.hpp"

namespace blocks {

namespace {

double clamp_range(double x, const ReputationParams& p) {
  return std::clamp(x, p.clamp_low, p.clamp_high);
}

double mean(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double consistency_ema(double prev, std::span<const double> consistencies,
                       const ReputationParams& params) {
  if (consistencies.empty()) return prev;
  const double target = 1.0 - mean(consistencies);
  return clamp_range(params.alpha * target + (1.0 - params.alpha) * prev, params);
}

}  // namespace

void ReputationParams::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw Error(Errc::ConfigError, "reputation.alpha must be in (0, 1]");
  }
  if (!(threshold_penalty >= 0.0 && threshold_penalty <= 1.0)) {
    throw Error(Errc::ConfigError, "reputation.threshold_penalty must be in [0, 1]");
  }
  if (!(official_threshold >= -1.0 && official_threshold <= 1.0)) {
    throw Error(Errc::ConfigError, "reputation.official_threshold must be in [-1, 1]");
  }
  if (!(validator_band >= 0.0)) {
    throw Error(Errc::ConfigError, "reputation.validator_band must be >= 0");
  }
}

double consistency(double own_score, std::span<const ValidationRecord> others,
                   double max_validator_reputation) {
  if (!(max_validator_reputation > 0.0)) {
    throw Error(Errc::NonPositiveMaxReputation,
                "max validator reputation " + std::to_string(max_validator_reputation));
  }
  if (others.empty()) return 0.0;

  double v_max = own_score;
  double v_min = own_score;
  double weighted = 0.0;
  for (const auto& o : others) {
    v_max = std::max(v_max, o.score);
    v_min = std::min(v_min, o.score);
    weighted += std::abs(own_score - o.score) * o.validator_reputation;
  }
  const double spread = v_max - v_min;
  if (spread == 0.0) return 0.0;

  // n counts the own validator too, so (n - 1) is the number of peers.
  const double denom = static_cast<double>(others.size()) * spread * max_validator_reputation;
  return clamp01(weighted / denom);
}

double confidence(std::span<const double> scores) {
  if (scores.empty()) throw Error(Errc::EmptyInput, "confidence of no scores");
  const double m = mean(scores);
  double ss = 0.0;
  for (double s : scores) ss += (s - m) * (s - m);
  return std::sqrt(ss / static_cast<double>(scores.size()));
}

double update_llm_reputation(double prev, std::span<const double> consistencies,
                             const ReputationParams& params) {
  return consistency_ema(prev, consistencies, params);
}

double update_validator_reputation(double prev, std::span<const double> consistencies,
                                   const ReputationParams& params) {
  return consistency_ema(prev, consistencies, params);
}

double update_prompt_reputation(double supplier_rep, std::span<const ValidationRecord> validations,
                                std::span<const FeedbackRecord> feedbacks) {
  const auto n = static_cast<double>(validations.size());
  const auto m = static_cast<double>(feedbacks.size());

  double validation_term = 0.0;
  std::vector<double> scores;
  scores.reserve(validations.size());
  for (const auto& v : validations) {
    validation_term += v.score * v.validator_reputation;
    scores.push_back(v.score);
  }
  // n * Mean(V_i * R_i) is just the sum.
  double feedback_term = 0.0;
  for (const auto& f : feedbacks) feedback_term += f.accuracy * f.llm_reputation;

  const double cf = scores.size() < 2 ? 0.0 : confidence(scores);
  return clamp01((supplier_rep + validation_term + feedback_term) / (n + m + 1.0) - cf);
}

double update_supplier_reputation(double prev, std::span<const double> prompt_reps,
                                  const ReputationParams& params) {
  if (prompt_reps.empty()) return prev;
  return clamp_range(params.alpha * mean(prompt_reps) + (1.0 - params.alpha) * prev, params);
}

OfficialVerdict official_check(double similarity, const ReputationParams& params) {
  if (similarity >= params.official_threshold) return OfficialPass{};
  return OfficialFail{1.0 - params.threshold_penalty};
}

}  // namespace blocks
