#include "camboost/explain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "camboost/error.hpp"

namespace camboost {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&values](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 hold ranks i+1..j
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = rank;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("spearman: inputs differ in length");
  if (a.size() < 2) throw DimensionError("spearman needs at least two values");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double mean = (n + 1.0) / 2.0;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    const double da = ra[i] - mean;
    const double db = rb[i] - mean;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw UndefinedError("spearman correlation of a constant map is undefined");
  const double r = sab / std::sqrt(saa * sbb);
  return std::clamp(r, -1.0, 1.0);
}

ExtremeMeans extreme_fraction_means(std::span<const double> map, double fraction) {
  if (!(fraction > 0.0 && fraction <= 0.5)) throw ValueError("extreme fraction must lie in (0, 0.5]");
  if (map.empty()) throw DimensionError("extreme_fraction_means of an empty map");
  const auto n = map.size();
  const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n))));
  std::vector<double> sorted(map.begin(), map.end());
  std::sort(sorted.begin(), sorted.end());
  double bottom = 0.0, top = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    bottom += sorted[i];
    top += sorted[n - 1 - i];
  }
  return {top / static_cast<double>(k), bottom / static_cast<double>(k)};
}

std::vector<double> gaussian_control_map(std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw DimensionError("gaussian control map needs H, W >= 1");
  const double sigma = static_cast<double>(std::min(height, width)) / 4.0;
  const double ci = (static_cast<double>(height) - 1.0) / 2.0;
  const double cj = (static_cast<double>(width) - 1.0) / 2.0;
  std::vector<double> out(height * width);
  for (std::size_t i = 0; i < height; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      const double di = static_cast<double>(i) - ci;
      const double dj = static_cast<double>(j) - cj;
      out[i * width + j] = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
    }
  }
  return out;
}

std::vector<ExplanationStats> compare_explanations(const Cam& cam_a, const Cam& cam_b,
                                                   std::span<const std::size_t> classes, double fraction) {
  if (cam_a.scores.shape() != cam_b.scores.shape()) {
    throw DimensionError("compare_explanations: CAM shapes " + shape_string(cam_a.scores.shape()) + " and " +
                         shape_string(cam_b.scores.shape()) + " differ");
  }
  std::vector<ExplanationStats> out;
  out.reserve(classes.size());
  for (const auto c : classes) {
    if (c >= cam_a.num_classes()) throw DimensionError("compare_explanations: class index out of range");
    ExplanationStats s;
    s.class_index = c;
    s.fraction = fraction;
    const auto ma = cam_a.channel(c);
    const auto mb = cam_b.channel(c);
    try {
      s.spearman = spearman(ma, mb);
    } catch (const UndefinedError&) {
      s.spearman.reset();
    }
    s.a = extreme_fraction_means(ma, fraction);
    s.b = extreme_fraction_means(mb, fraction);
    out.push_back(s);
  }
  return out;
}

}  // namespace camboost
