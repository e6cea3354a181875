#include "camboost/losses.hpp"

#include <algorithm>
#include <string>

#include "camboost/error.hpp"
#include "camboost/ops.hpp"

namespace camboost {

LabelVector LabelVector::from_full(std::span<const std::uint8_t> full) {
  std::vector<LabelState> s(full.size());
  for (std::size_t i = 0; i < full.size(); ++i) s[i] = full[i] ? LabelState::Positive : LabelState::Negative;
  return LabelVector(std::move(s));
}

namespace {

std::vector<std::size_t> indices_with(const std::vector<LabelState>& states, LabelState wanted) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i] == wanted) out.push_back(i);
  }
  return out;
}

void check_lengths(std::size_t logits, std::size_t labels) {
  if (logits == 0) throw ValueError("loss over zero categories");
  if (logits != labels) {
    throw DimensionError("loss got " + std::to_string(logits) + " logits and " + std::to_string(labels) + " labels");
  }
}

}  // namespace

std::vector<std::size_t> LabelVector::positives() const { return indices_with(states_, LabelState::Positive); }
std::vector<std::size_t> LabelVector::negatives() const { return indices_with(states_, LabelState::Negative); }
std::vector<std::size_t> LabelVector::unannotated() const { return indices_with(states_, LabelState::Unannotated); }

bool LabelVector::is_sparse() const { return positives().size() + negatives().size() < unannotated().size(); }

NoiseDecomposition decompose(const LabelVector& partial, std::span<const std::uint8_t> full) {
  if (partial.size() != full.size()) throw DimensionError("decompose: label lengths differ");
  NoiseDecomposition d;
  for (std::size_t i = 0; i < full.size(); ++i) {
    if (partial[i] == LabelState::Positive) continue;
    (full[i] ? d.false_negative_indices : d.true_negative_indices).push_back(i);
  }
  return d;
}

double bce_pos(double g) { return ops::softplus(-g); }
double bce_neg(double g) { return ops::softplus(g); }
double bce(double g, Target target) { return target == Target::Positive ? bce_pos(g) : bce_neg(g); }

double logit_grad(double g, Target target) {
  const double s = ops::sigmoid(g);
  return target == Target::Positive ? s - 1.0 : s;
}

std::vector<Target> assume_negative_targets(const LabelVector& labels) {
  std::vector<Target> t(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    t[i] = labels[i] == LabelState::Positive ? Target::Positive : Target::Negative;
  }
  return t;
}

std::vector<Target> full_targets(std::span<const std::uint8_t> full) {
  std::vector<Target> t(full.size());
  for (std::size_t i = 0; i < full.size(); ++i) t[i] = full[i] ? Target::Positive : Target::Negative;
  return t;
}

double weighted_bce(std::span<const double> logits, std::span<const Target> targets, std::span<const double> weights) {
  check_lengths(logits.size(), targets.size());
  if (!weights.empty() && weights.size() != logits.size()) throw DimensionError("loss weights length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (w != 0.0) total += w * bce(logits[i], targets[i]);
  }
  return total / static_cast<double>(logits.size());
}

Var weighted_bce(Tape& tape, Var logits, std::span<const Target> targets, std::span<const double> weights) {
  const Tensor& g = tape.value(logits);
  const double value = weighted_bce(g.data(), targets, weights);
  std::vector<Target> t(targets.begin(), targets.end());
  std::vector<double> w(weights.begin(), weights.end());
  return tape.record(Tensor::scalar(value), {logits},
                     [logits, t = std::move(t), w = std::move(w)](const Tape& tp, std::span<const double> og,
                                                                  std::span<std::span<double>> in) {
                       const auto gv = tp.value(logits).data();
                       const double inv = 1.0 / static_cast<double>(gv.size());
                       for (std::size_t i = 0; i < gv.size(); ++i) {
                         const double wi = w.empty() ? 1.0 : w[i];
                         if (wi != 0.0) in[0][i] += og[0] * wi * inv * logit_grad(gv[i], t[i]);
                       }
                     });
}

double an_loss(std::span<const double> logits, const LabelVector& labels) {
  check_lengths(logits.size(), labels.size());
  return weighted_bce(logits, assume_negative_targets(labels));
}

Var an_loss(Tape& tape, Var logits, const LabelVector& labels) {
  check_lengths(tape.value(logits).size(), labels.size());
  return weighted_bce(tape, logits, assume_negative_targets(labels));
}

double full_loss(std::span<const double> logits, std::span<const std::uint8_t> full) {
  check_lengths(logits.size(), full.size());
  return weighted_bce(logits, full_targets(full));
}

Var full_loss(Tape& tape, Var logits, std::span<const std::uint8_t> full) {
  check_lengths(tape.value(logits).size(), full.size());
  return weighted_bce(tape, logits, full_targets(full));
}

double gradient_gap(const LabelVector& partial, const NoiseDecomposition& decomposition) {
  const std::size_t c = partial.size();
  if (c == 0) throw ValueError("gradient_gap over zero categories");
  std::vector<int> seen(c, 0);
  for (const auto* set : {&decomposition.true_negative_indices, &decomposition.false_negative_indices}) {
    for (auto i : *set) {
      if (i >= c) throw ValueError("decomposition index " + std::to_string(i) + " out of range");
      if (partial[i] == LabelState::Positive) {
        throw ValueError("decomposition lists observed positive " + std::to_string(i) + " as negative");
      }
      if (seen[i]++) throw ValueError("decomposition index " + std::to_string(i) + " listed twice");
    }
  }
  for (std::size_t i = 0; i < c; ++i) {
    if (partial[i] != LabelState::Positive && !seen[i]) {
      throw ValueError("assumed-negative index " + std::to_string(i) + " missing from decomposition");
    }
  }
  return static_cast<double>(decomposition.false_negative_indices.size()) / static_cast<double>(c);
}

}  // namespace camboost
