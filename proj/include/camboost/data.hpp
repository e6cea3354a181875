#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "camboost/losses.hpp"
#include "camboost/tensor.hpp"

namespace camboost {

/// Procedural multi-label images: one bright axis-aligned blob per positive
/// class, placed around a class-specific canonical location, plus Gaussian
/// pixel noise. Each class fills its blob with its own texture, since a
/// convolutional stack with global pooling cannot tell classes apart by
/// position alone.
struct SyntheticSpec {
  std::size_t num_classes = 6;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t num_samples = 2000;
  std::size_t blob_min = 6;  // blob side range in pixels
  std::size_t blob_max = 10;
  std::size_t min_positives = 1;
  std::size_t max_positives = 3;
  /// Maximum offset of a blob centre from its canonical centre, in pixels.
  std::size_t jitter = 2;
  double noise = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Grid cell owned by a class; its centre is the canonical blob centre.
struct CanonicalRegion {
  std::size_t row0, row1;  // [row0, row1)
  std::size_t col0, col1;
  double center_row() const { return 0.5 * static_cast<double>(row0 + row1 - 1); }
  double center_col() const { return 0.5 * static_cast<double>(col0 + col1 - 1); }
  bool contains(std::size_t r, std::size_t c) const { return r >= row0 && r < row1 && c >= col0 && c < col1; }
};

inline constexpr std::size_t kTextureKinds = 8;

/// Whether pixel (i, j) of a blob, relative to its top-left corner, is lit
/// for the given class. Kinds cycle through solid, horizontal and vertical
/// stripes, checkerboard, two diagonals, dots and a cross-hatch; the period
/// grows every kTextureKinds classes.
bool texture_on(std::size_t class_index, std::size_t i, std::size_t j);

std::vector<CanonicalRegion> canonical_regions(std::size_t num_classes, std::size_t height, std::size_t width);

struct Sample {
  Tensor image;  // 1 x H x W
  std::vector<std::uint8_t> full_labels;
  LabelVector observed;
};

struct Dataset {
  std::size_t num_classes = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<Sample> samples;

  std::size_t size() const noexcept { return samples.size(); }
};

/// Bitwise equality of headers, images and labels.
bool same_contents(const Dataset& a, const Dataset& b);

/// Observed labels equal the full labels; use make_single_positive for the
/// partial-label setting. Deterministic in spec.seed.
Dataset generate_dataset(const SyntheticSpec& spec);

/// Keeps one uniformly chosen positive; every other entry is unannotated.
LabelVector to_single_positive(std::span<const std::uint8_t> full, std::mt19937_64& rng);
LabelVector to_single_positive(std::span<const std::uint8_t> full, std::uint64_t seed);
void make_single_positive(Dataset& dataset, std::uint64_t seed);

/// Stateless 64-bit mixing for deriving per-item seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

struct DatasetSummary {
  std::vector<std::size_t> class_positive_counts;  // from full labels
  double mean_observed_positive = 0.0;
  double mean_observed_negative = 0.0;
  double mean_unannotated = 0.0;
  std::size_t sparse_samples = 0;
};
DatasetSummary summarize(const Dataset& dataset);

std::vector<char> encode_dataset(const Dataset& dataset);
Dataset decode_dataset(std::span<const char> bytes);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace camboost
