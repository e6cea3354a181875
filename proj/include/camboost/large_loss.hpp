#pragma once

#include <cstddef>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "camboost/losses.hpp"

namespace camboost {

enum class LLPolicy { Reject, CorrectTemp, CorrectPerm };

std::string to_string(LLPolicy policy);
/// Accepts "r", "ct", "cp" (and the long names "reject", "correct-temp",
/// "correct-perm").
LLPolicy parse_policy(const std::string& text);

struct LLConfig {
  LLPolicy policy = LLPolicy::Reject;
  /// Percent of candidate terms added to the modification rate per epoch.
  double delta_rel = 0.5;
  int warmup_epochs = 1;
  /// When set, observed negatives are never selected; only unannotated
  /// terms are candidates.
  bool exclude_observed_negatives = false;

  void validate() const;
};

/// 0 during warmup, then min(delta_rel * (epoch - warmup), 100) / 100.
/// Epochs are 1-based.
double modification_rate(int epoch, const LLConfig& config);

/// One assumed-negative loss term that may be selected.
struct CandidateLoss {
  std::size_t sample_id = 0;
  std::size_t class_index = 0;
  double loss = 0.0;
};

/// Marks the floor(rate * N) largest losses. Ties are broken by sample id,
/// then class index, both ascending.
std::vector<bool> select_large_losses(std::span<const CandidateLoss> candidates, double rate);

/// A (sample, class) loss term of the current batch.
struct LossTerm {
  std::size_t sample_id = 0;
  std::size_t class_index = 0;
  double logit = 0.0;
  Target target = Target::Negative;
  double weight = 1.0;

  double loss() const { return weight * bce(logit, target); }
};

struct LLEpochStats {
  int epoch = 0;
  double rate = 0.0;
  std::size_t terms_modified = 0;
  std::size_t false_negatives_hit = 0;
  std::size_t true_negatives_hit = 0;
};

/// Persistent large-loss bookkeeping across epochs.
class LLState {
 public:
  bool is_flipped(std::size_t sample_id, std::size_t class_index) const;
  /// Idempotent; the flip set only grows.
  void flip_permanently(std::size_t sample_id, std::size_t class_index) { flips_.emplace(sample_id, class_index); }
  const std::set<std::pair<std::size_t, std::size_t>>& permanent_flips() const noexcept { return flips_; }

  void begin_epoch(int epoch, double rate);
  LLEpochStats& current();
  const std::vector<LLEpochStats>& history() const noexcept { return history_; }

 private:
  std::set<std::pair<std::size_t, std::size_t>> flips_;
  std::vector<LLEpochStats> history_;
};

struct PolicyOutcome {
  std::vector<LossTerm> terms;
  std::size_t modified = 0;
  /// Sum of modified term losses (unnormalized).
  double total_loss = 0.0;
};

/// Reject zeroes the weight of masked terms. CorrectTemp flips their target
/// to positive for this step. CorrectPerm does the same and records the
/// flip in `state` so later epochs treat the label as positive.
PolicyOutcome apply_policy(std::span<const LossTerm> terms, const std::vector<bool>& mask, LLPolicy policy,
                           LLState& state);

/// True when (sample, class) is positive in the ground truth.
using GroundTruth = std::function<bool(std::size_t sample_id, std::size_t class_index)>;

std::size_t count_rejected_false_negatives(std::span<const CandidateLoss> candidates, const std::vector<bool>& mask,
                                           const GroundTruth& truth);

}  // namespace camboost
