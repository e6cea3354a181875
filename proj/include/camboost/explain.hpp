#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "camboost/network.hpp"

namespace camboost {

/// Average ranks (1-based); tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of average ranks. Throws UndefinedError when either
/// input is constant and DimensionError on length mismatch or length < 2.
double spearman(std::span<const double> a, std::span<const double> b);

struct ExtremeMeans {
  double top = 0.0;
  double bottom = 0.0;
};

/// Means of the k = ceil(fraction * n) largest and smallest values.
ExtremeMeans extreme_fraction_means(std::span<const double> map, double fraction = 0.05);

/// Isotropic Gaussian centred at the map midpoint, sigma = min(H, W) / 4,
/// flattened row-major.
std::vector<double> gaussian_control_map(std::size_t height, std::size_t width);

struct ExplanationStats {
  std::size_t class_index = 0;
  /// Empty when either map is constant.
  std::optional<double> spearman;
  ExtremeMeans a;
  ExtremeMeans b;
  double fraction = 0.05;
};

/// Per listed class: Spearman between the two maps and the extreme-fraction
/// means of each.
std::vector<ExplanationStats> compare_explanations(const Cam& cam_a, const Cam& cam_b,
                                                   std::span<const std::size_t> classes, double fraction = 0.05);

}  // namespace camboost
