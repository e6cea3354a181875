#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "camboost/tape.hpp"

namespace camboost {

enum class LabelState : std::uint8_t { Negative = 0, Positive = 1, Unannotated = 2 };
enum class Target : std::uint8_t { Negative = 0, Positive = 1 };

/// Per-image label state over C categories.
class LabelVector {
 public:
  LabelVector() = default;
  explicit LabelVector(std::vector<LabelState> states) : states_(std::move(states)) {}
  /// Fully observed labels from a binary vector.
  static LabelVector from_full(std::span<const std::uint8_t> full);

  std::size_t size() const noexcept { return states_.size(); }
  LabelState operator[](std::size_t i) const { return states_[i]; }
  LabelState& operator[](std::size_t i) { return states_[i]; }
  const std::vector<LabelState>& states() const noexcept { return states_; }

  std::vector<std::size_t> positives() const;
  std::vector<std::size_t> negatives() const;
  std::vector<std::size_t> unannotated() const;
  /// True when |I^p| + |I^n| < |I^phi|.
  bool is_sparse() const;

  bool operator==(const LabelVector&) const = default;

 private:
  std::vector<LabelState> states_;
};

/// Split of the assumed-negative indices into true and false negatives.
struct NoiseDecomposition {
  std::vector<std::size_t> true_negative_indices;
  std::vector<std::size_t> false_negative_indices;
};

/// Decomposition implied by ground-truth labels.
NoiseDecomposition decompose(const LabelVector& partial, std::span<const std::uint8_t> full);

/// -log sigmoid(g), computed as softplus(-g).
double bce_pos(double g);
/// -log(1 - sigmoid(g)), computed as softplus(g).
double bce_neg(double g);
double bce(double g, Target target);
/// d bce / dg: sigmoid(g) - 1 for a positive target, sigmoid(g) for a negative one.
double logit_grad(double g, Target target);

/// Targets under the assume-negative rule: observed positives stay positive,
/// everything else is negative.
std::vector<Target> assume_negative_targets(const LabelVector& labels);
std::vector<Target> full_targets(std::span<const std::uint8_t> full);

/// (1/C) * sum_i w_i * bce(g_i, t_i). An empty `weights` means all ones.
double weighted_bce(std::span<const double> logits, std::span<const Target> targets,
                    std::span<const double> weights = {});
Var weighted_bce(Tape& tape, Var logits, std::span<const Target> targets, std::span<const double> weights = {});

double an_loss(std::span<const double> logits, const LabelVector& labels);
Var an_loss(Tape& tape, Var logits, const LabelVector& labels);
double full_loss(std::span<const double> logits, std::span<const std::uint8_t> full);
Var full_loss(Tape& tape, Var logits, std::span<const std::uint8_t> full);

/// |I^fn| / C: the per-sample excess of summed assume-negative logit
/// gradients over the full-label ones. Throws ValueError when the
/// decomposition does not partition the assumed-negative indices.
double gradient_gap(const LabelVector& partial, const NoiseDecomposition& decomposition);

}  // namespace camboost
