#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace camboost {

/// Mean of precision at the rank of each positive, ranking by score
/// descending with ties broken by index ascending. Throws UndefinedError
/// when there are no positives.
double average_precision(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct MapResult {
  double map = 0.0;
  std::vector<std::optional<double>> per_class;  // empty for classes without positives
  std::size_t skipped_classes = 0;
};

/// Row-major N x C score and label matrices. Unweighted mean of per-class
/// AP over classes with at least one positive.
MapResult mean_ap(std::span<const double> scores, std::span<const std::uint8_t> labels, std::size_t num_classes);

}  // namespace camboost
