#include "camboost/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "camboost/error.hpp"

namespace camboost {

double average_precision(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw DimensionError("average_precision: scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&scores](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[order[rank]]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  if (hits == 0) throw UndefinedError("average precision is undefined without positives");
  return sum / static_cast<double>(hits);
}

MapResult mean_ap(std::span<const double> scores, std::span<const std::uint8_t> labels, std::size_t num_classes) {
  if (num_classes == 0 || scores.size() != labels.size() || scores.size() % num_classes != 0) {
    throw DimensionError("mean_ap: score and label matrices disagree in shape");
  }
  const std::size_t n = scores.size() / num_classes;
  MapResult result;
  result.per_class.resize(num_classes);
  std::vector<double> col_scores(n);
  std::vector<std::uint8_t> col_labels(n);
  double total = 0.0;
  std::size_t evaluated = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      col_scores[i] = scores[i * num_classes + c];
      col_labels[i] = labels[i * num_classes + c];
    }
    if (std::none_of(col_labels.begin(), col_labels.end(), [](std::uint8_t v) { return v != 0; })) {
      ++result.skipped_classes;
      continue;
    }
    const double ap = average_precision(col_scores, col_labels);
    result.per_class[c] = ap;
    total += ap;
    ++evaluated;
  }
  if (evaluated == 0) throw UndefinedError("mean_ap: no class has a positive label");
  result.map = total / static_cast<double>(evaluated);
  return result;
}

}  // namespace camboost
