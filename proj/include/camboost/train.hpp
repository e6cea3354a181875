#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "camboost/data.hpp"
#include "camboost/large_loss.hpp"
#include "camboost/metrics.hpp"
#include "camboost/network.hpp"
#include "camboost/optimizer.hpp"

namespace camboost {

struct TrainConfig {
  int epochs = 10;
  std::size_t batch_size = 8;
  double learning_rate = 2e-3;
  /// Learning-rate multiplier for the 1x1 head.
  double head_lr_multiplier = 10.0;
  AdamConfig adam{};
  std::optional<BoostParams> boost_in_training;
  std::optional<BoostParams> boost_in_inference;
  std::optional<LLConfig> ll;
  /// Train with full labels and plain BCE instead of the observed labels.
  bool full_labels = false;
  /// Disable training-time boost for classes with no observed positive.
  bool skip_boost_for_positiveless_classes = true;
  /// Fraction of the dataset tail held out for validation / model selection.
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_map = 0.0;
  double ll_rate = 0.0;
  std::size_t ll_modified = 0;
  std::size_t ll_fn_hits = 0;
  std::size_t ll_tn_hits = 0;
};

struct TrainResult {
  /// Weights with the best validation mAP (the initial weights if epochs = 0).
  CamNet best;
  CamNet last;
  int best_epoch = 0;
  double best_val_map = 0.0;
  std::vector<EpochRecord> history;
  LLState ll_state;
  std::vector<bool> boost_channels;
};

/// Index split: the first (1 - validation_fraction) of samples train, the
/// tail validates.
std::size_t training_split_size(std::size_t n, double validation_fraction);

/// Per-class flags: true where some training sample has an observed positive.
std::vector<bool> classes_with_observed_positive(const Dataset& dataset, std::size_t count);

TrainResult train(const CamNet& initial, const Dataset& dataset, const TrainConfig& config);

/// Logits of every sample in [begin, end), row-major N x C.
std::vector<double> predict_logits(const CamNet& net, const Dataset& dataset, std::size_t begin, std::size_t end,
                                   const std::optional<BoostParams>& boost);
/// mAP against full labels over [begin, end).
MapResult evaluate(const CamNet& net, const Dataset& dataset, std::size_t begin, std::size_t end,
                   const std::optional<BoostParams>& boost);

void write_history_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path);
void write_ll_csv(const std::vector<EpochRecord>& history, LLPolicy policy, const std::filesystem::path& path);

}  // namespace camboost
