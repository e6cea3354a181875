#include "camboost/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "camboost/error.hpp"
#include "camboost/optimizer.hpp"

namespace camboost {

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (!(learning_rate > 0.0) || !(head_lr_multiplier > 0.0)) throw ConfigError("learning rates must be positive");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("validation fraction must lie in [0, 1)");
  }
  if (boost_in_training) boost_in_training->validate();
  if (boost_in_inference) boost_in_inference->validate();
  if (ll) ll->validate();
}

std::size_t training_split_size(std::size_t n, double validation_fraction) {
  const auto val = static_cast<std::size_t>(std::floor(validation_fraction * static_cast<double>(n)));
  return n - val;
}

std::vector<bool> classes_with_observed_positive(const Dataset& dataset, std::size_t count) {
  std::vector<bool> has(dataset.num_classes, false);
  for (std::size_t i = 0; i < count; ++i) {
    for (const auto c : dataset.samples[i].observed.positives()) has[c] = true;
  }
  return has;
}

std::vector<double> predict_logits(const CamNet& net, const Dataset& dataset, std::size_t begin, std::size_t end,
                                   const std::optional<BoostParams>& boost) {
  const auto c = net.num_classes();
  std::vector<double> out;
  out.reserve((end - begin) * c);
  for (std::size_t i = begin; i < end; ++i) {
    const Tensor logits = forward_logits(net, dataset.samples[i].image, boost);
    out.insert(out.end(), logits.data().begin(), logits.data().end());
  }
  return out;
}

MapResult evaluate(const CamNet& net, const Dataset& dataset, std::size_t begin, std::size_t end,
                   const std::optional<BoostParams>& boost) {
  if (dataset.num_classes != net.num_classes()) {
    throw DimensionError("dataset has " + std::to_string(dataset.num_classes) + " classes, network " +
                         std::to_string(net.num_classes()));
  }
  const auto scores = predict_logits(net, dataset, begin, end, boost);
  std::vector<std::uint8_t> labels;
  labels.reserve(scores.size());
  for (std::size_t i = begin; i < end; ++i) {
    labels.insert(labels.end(), dataset.samples[i].full_labels.begin(), dataset.samples[i].full_labels.end());
  }
  return mean_ap(scores, labels, dataset.num_classes);
}

namespace {

struct BatchOutcome {
  double loss = 0.0;
  std::size_t modified = 0;
  std::size_t fn_hits = 0;
  std::size_t tn_hits = 0;
};

class Trainer {
 public:
  Trainer(const CamNet& initial, const Dataset& dataset, const TrainConfig& config)
      : net_(initial), dataset_(dataset), config_(config), optimizer_(make_groups(net_, config)) {
    train_count_ = training_split_size(dataset.size(), config.validation_fraction);
    if (train_count_ == 0) throw ConfigError("training split is empty");
    if (dataset.num_classes != net_.num_classes()) {
      throw DimensionError("dataset has " + std::to_string(dataset.num_classes) + " classes, network " +
                           std::to_string(net_.num_classes()));
    }
    if (Shape{1, dataset.height, dataset.width} != net_.input_shape()) {
      throw DimensionError("dataset images do not match the network input " + shape_string(net_.input_shape()));
    }
    if (config.skip_boost_for_positiveless_classes && !config.full_labels) {
      boost_channels_ = classes_with_observed_positive(dataset, train_count_);
    } else {
      boost_channels_.assign(dataset.num_classes, true);
    }
  }

  TrainResult run() {
    TrainResult result;
    result.best = net_;
    result.best_val_map = -1.0;
    std::vector<std::size_t> order(train_count_);
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 1; epoch <= config_.epochs; ++epoch) {
      std::mt19937_64 shuffle_rng(mix_seed(config_.seed, static_cast<std::uint64_t>(epoch)));
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      const double rate = config_.ll ? modification_rate(epoch, *config_.ll) : 0.0;
      if (config_.ll) ll_state_.begin_epoch(epoch, rate);

      EpochRecord rec;
      rec.epoch = epoch;
      rec.ll_rate = rate;
      double loss_sum = 0.0;
      std::size_t batches = 0;
      for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
        const auto stop = std::min(order.size(), start + config_.batch_size);
        const auto out = step(std::span<const std::size_t>(order).subspan(start, stop - start), rate);
        if (!std::isfinite(out.loss)) {
          throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                                std::to_string(batches + 1));
        }
        loss_sum += out.loss;
        ++batches;
        rec.ll_modified += out.modified;
        rec.ll_fn_hits += out.fn_hits;
        rec.ll_tn_hits += out.tn_hits;
      }
      rec.train_loss = batches ? loss_sum / static_cast<double>(batches) : 0.0;
      if (config_.ll) {
        auto& cur = ll_state_.current();
        cur.terms_modified = rec.ll_modified;
        cur.false_negatives_hit = rec.ll_fn_hits;
        cur.true_negatives_hit = rec.ll_tn_hits;
      }
      rec.val_map = validation_map();
      if (rec.val_map > result.best_val_map) {
        result.best_val_map = rec.val_map;
        result.best = net_;
        result.best_epoch = epoch;
      }
      result.history.push_back(rec);
    }
    if (config_.epochs == 0) result.best_val_map = validation_map();
    result.last = net_;
    result.ll_state = ll_state_;
    result.boost_channels = boost_channels_;
    return result;
  }

 private:
  static std::vector<ParamGroup> make_groups(CamNet& net, const TrainConfig& config) {
    auto params = net.parameters();
    const auto body = net.body_parameter_count();
    ParamGroup body_group{{params.begin(), params.begin() + static_cast<std::ptrdiff_t>(body)}, config.learning_rate};
    ParamGroup head_group{{params.begin() + static_cast<std::ptrdiff_t>(body), params.end()},
                          config.learning_rate * config.head_lr_multiplier};
    return {body_group, head_group};
  }

  double validation_map() const {
    if (train_count_ == dataset_.size()) return 0.0;
    try {
      return evaluate(net_, dataset_, train_count_, dataset_.size(), config_.boost_in_inference).map;
    } catch (const UndefinedError&) {
      return 0.0;
    }
  }

  Target current_target(std::size_t sample_id, std::size_t c) const {
    const Sample& s = dataset_.samples[sample_id];
    if (config_.full_labels) return s.full_labels[c] ? Target::Positive : Target::Negative;
    if (s.observed[c] == LabelState::Positive || ll_state_.is_flipped(sample_id, c)) return Target::Positive;
    return Target::Negative;
  }

  BatchOutcome step(std::span<const std::size_t> batch, double rate) {
    const auto num_classes = net_.num_classes();
    Tape tape;
    const NetVars vars = bind_parameters(tape, net_);
    std::vector<Var> logits;
    logits.reserve(batch.size());
    for (const auto id : batch) {
      const Var x = tape.constant(dataset_.samples[id].image);
      logits.push_back(forward_logits(tape, net_, vars, x, config_.boost_in_training, boost_channels_));
    }

    std::vector<LossTerm> terms;
    terms.reserve(batch.size() * num_classes);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const auto g = tape.value(logits[b]).data();
      for (std::size_t c = 0; c < num_classes; ++c) {
        terms.push_back({batch[b], c, g[c], current_target(batch[b], c), 1.0});
      }
    }

    BatchOutcome out;
    if (config_.ll && !config_.full_labels) apply_large_loss(terms, rate, out);

    std::vector<Var> losses;
    losses.reserve(batch.size());
    std::vector<Target> targets(num_classes);
    std::vector<double> weights(num_classes);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      for (std::size_t c = 0; c < num_classes; ++c) {
        targets[c] = terms[b * num_classes + c].target;
        weights[c] = terms[b * num_classes + c].weight;
      }
      losses.push_back(weighted_bce(tape, logits[b], targets, weights));
    }
    const Var loss = mean(tape, losses);
    out.loss = tape.value(loss).item();
    if (!std::isfinite(out.loss)) return out;

    net_.zero_grad();
    tape.backward(loss);
    optimizer_.step();
    return out;
  }

  void apply_large_loss(std::vector<LossTerm>& terms, double rate, BatchOutcome& out) {
    std::vector<std::size_t> positions;
    std::vector<CandidateLoss> candidates;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const auto& t = terms[i];
      if (t.target != Target::Negative) continue;
      if (config_.ll->exclude_observed_negatives &&
          dataset_.samples[t.sample_id].observed[t.class_index] == LabelState::Negative) {
        continue;
      }
      positions.push_back(i);
      candidates.push_back({t.sample_id, t.class_index, t.loss()});
    }
    const auto mask = select_large_losses(candidates, rate);
    const auto truth = [this](std::size_t s, std::size_t c) { return dataset_.samples[s].full_labels[c] != 0; };
    out.fn_hits = count_rejected_false_negatives(candidates, mask, truth);

    std::vector<LossTerm> selected_terms;
    for (const auto p : positions) selected_terms.push_back(terms[p]);
    const auto outcome = apply_policy(selected_terms, mask, config_.ll->policy, ll_state_);
    for (std::size_t k = 0; k < positions.size(); ++k) terms[positions[k]] = outcome.terms[k];
    out.modified = outcome.modified;
    out.tn_hits = outcome.modified - out.fn_hits;
  }

  CamNet net_;
  const Dataset& dataset_;
  TrainConfig config_;
  Adam optimizer_;
  std::size_t train_count_ = 0;
  std::vector<bool> boost_channels_;
  LLState ll_state_;
};

}  // namespace

TrainResult train(const CamNet& initial, const Dataset& dataset, const TrainConfig& config) {
  config.validate();
  Trainer trainer(initial, dataset, config);
  return trainer.run();
}

void write_history_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.precision(17);
  out << "epoch,train_loss,val_mAP,ll_modified,ll_fn_hits\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << r.train_loss << ',' << r.val_map << ',' << r.ll_modified << ',' << r.ll_fn_hits << '\n';
  }
}

void write_ll_csv(const std::vector<EpochRecord>& history, LLPolicy policy, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.precision(17);
  out << "epoch,policy,rate,terms_modified,false_negatives_hit,true_negatives_hit\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << to_string(policy) << ',' << r.ll_rate << ',' << r.ll_modified << ',' << r.ll_fn_hits
        << ',' << r.ll_tn_hits << '\n';
  }
}

}  // namespace camboost
