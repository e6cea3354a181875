#include "camboost/large_loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "camboost/error.hpp"

namespace camboost {

std::string to_string(LLPolicy policy) {
  switch (policy) {
    case LLPolicy::Reject:
      return "r";
    case LLPolicy::CorrectTemp:
      return "ct";
    case LLPolicy::CorrectPerm:
      return "cp";
  }
  return "?";
}

LLPolicy parse_policy(const std::string& text) {
  if (text == "r" || text == "reject") return LLPolicy::Reject;
  if (text == "ct" || text == "correct-temp") return LLPolicy::CorrectTemp;
  if (text == "cp" || text == "correct-perm") return LLPolicy::CorrectPerm;
  throw ConfigError("unknown large-loss policy '" + text + "' (expected r, ct or cp)");
}

void LLConfig::validate() const {
  if (!(delta_rel >= 0.0) || !std::isfinite(delta_rel)) throw ConfigError("ll delta_rel must be >= 0");
  if (warmup_epochs < 0) throw ConfigError("ll warmup_epochs must be >= 0");
}

double modification_rate(int epoch, const LLConfig& config) {
  if (epoch < 1) throw ValueError("epochs are 1-based, got " + std::to_string(epoch));
  if (epoch <= config.warmup_epochs) return 0.0;
  const double percent = std::min(config.delta_rel * static_cast<double>(epoch - config.warmup_epochs), 100.0);
  return percent / 100.0;
}

std::vector<bool> select_large_losses(std::span<const CandidateLoss> candidates, double rate) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ValueError("modification rate outside [0, 1]");
  std::vector<bool> mask(candidates.size(), false);
  const auto k = static_cast<std::size_t>(std::floor(rate * static_cast<double>(candidates.size())));
  if (k == 0) return mask;
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto before = [&candidates](std::size_t a, std::size_t b) {
    const auto& x = candidates[a];
    const auto& y = candidates[b];
    if (x.loss != y.loss) return x.loss > y.loss;
    if (x.sample_id != y.sample_id) return x.sample_id < y.sample_id;
    return x.class_index < y.class_index;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), before);
  for (std::size_t i = 0; i < k; ++i) mask[order[i]] = true;
  return mask;
}

bool LLState::is_flipped(std::size_t sample_id, std::size_t class_index) const {
  return flips_.contains({sample_id, class_index});
}

void LLState::begin_epoch(int epoch, double rate) {
  history_.push_back(LLEpochStats{epoch, rate, 0, 0, 0});
}

LLEpochStats& LLState::current() {
  if (history_.empty()) throw UsageError("LLState::current before begin_epoch");
  return history_.back();
}

PolicyOutcome apply_policy(std::span<const LossTerm> terms, const std::vector<bool>& mask, LLPolicy policy,
                           LLState& state) {
  if (mask.size() != terms.size()) throw DimensionError("policy mask length does not match loss terms");
  PolicyOutcome out;
  out.terms.assign(terms.begin(), terms.end());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    LossTerm& t = out.terms[i];
    if (mask[i]) {
      ++out.modified;
      switch (policy) {
        case LLPolicy::Reject:
          t.weight = 0.0;
          break;
        case LLPolicy::CorrectTemp:
          t.target = Target::Positive;
          break;
        case LLPolicy::CorrectPerm:
          t.target = Target::Positive;
          state.flip_permanently(t.sample_id, t.class_index);
          break;
      }
    }
    out.total_loss += t.loss();
  }
  return out;
}

std::size_t count_rejected_false_negatives(std::span<const CandidateLoss> candidates, const std::vector<bool>& mask,
                                           const GroundTruth& truth) {
  if (mask.size() != candidates.size()) throw DimensionError("selection mask length does not match candidates");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (mask[i] && truth(candidates[i].sample_id, candidates[i].class_index)) ++hits;
  }
  return hits;
}

}  // namespace camboost
