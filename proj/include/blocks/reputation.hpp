#pragma once

#include <span>
#include <variant>
#include <vector>

#include "blocks/types.hpp"

namespace blocks {

/// One validator's score for one prompt, with the validator's reputation at
/// the time the score was cast.
struct ValidationRecord {
  NodeId validator_id;
  double score = 0.0;
  double validator_reputation = 0.0;
};

/// A user's accuracy feedback on delivered content, weighted by the user's
/// (LLM service's) reputation.
struct FeedbackRecord {
  NodeId llm_id;
  double accuracy = 0.0;
  double llm_reputation = 0.0;
};

struct ReputationParams {
  double alpha = 0.2;
  double clamp_low = 0.0;
  double clamp_high = 1.0;
  /// Minimum official similarity a submission needs to pass the trusted check.
  double official_threshold = 0.5;
  /// Fractional cut applied to a node the official check flags.
  double threshold_penalty = 0.5;
  /// Largest allowed gap between a regular validator's score and the official
  /// validator's score before the validator itself is flagged.
  double validator_band = 0.3;

  void validate() const;
};

/// Reputation-weighted disagreement of `own_score` with the other validators of
/// the same prompt, normalised by the score spread and the top reputation.
/// 0 is perfect agreement. Degenerate inputs (no peers, zero spread) give 0.
double consistency(double own_score, std::span<const ValidationRecord> others,
                   double max_validator_reputation);

/// Population standard deviation of the scores.
double confidence(std::span<const double> scores);

/// EMA of (1 - mean consistency). Used for both LLM services and validators.
double update_llm_reputation(double prev, std::span<const double> consistencies,
                             const ReputationParams& params);
double update_validator_reputation(double prev, std::span<const double> consistencies,
                                   const ReputationParams& params);

/// Prompt reputation from its supplier's standing, the validations and the
/// user feedback, minus the score spread as a risk term.
double update_prompt_reputation(double supplier_rep, std::span<const ValidationRecord> validations,
                                std::span<const FeedbackRecord> feedbacks);

double update_supplier_reputation(double prev, std::span<const double> prompt_reps,
                                  const ReputationParams& params);

struct OfficialPass {};
struct OfficialFail {
  double factor = 1.0;
  double penalized(double prev) const { return prev * factor; }
};
using OfficialVerdict = std::variant<OfficialPass, OfficialFail>;

/// Trusted-service gate: pass iff similarity >= official_threshold.
OfficialVerdict official_check(double similarity, const ReputationParams& params);

inline bool passed(const OfficialVerdict& v) { return std::holds_alternative<OfficialPass>(v); }

}  // namespace blocks
