#include "camboost/data.hpp"

#include <algorithm>
#include <cmath>

#include "binary_io.hpp"
#include "camboost/error.hpp"

namespace camboost {

void SyntheticSpec::validate() const {
  if (num_classes == 0) throw ValueError("synthetic spec needs at least one class");
  if (height == 0 || width == 0) throw ValueError("synthetic image size must be positive");
  if (num_samples == 0) throw ValueError("synthetic spec needs at least one sample");
  if (blob_min == 0 || blob_min > blob_max) throw ValueError("blob size range must satisfy 0 < min <= max");
  if (blob_max > std::min(height, width)) {
    throw ValueError("blob size " + std::to_string(blob_max) + " exceeds the " + std::to_string(height) + "x" +
                     std::to_string(width) + " image");
  }
  if (min_positives == 0 || min_positives > max_positives || max_positives > num_classes) {
    throw ValueError("positives per image must satisfy 1 <= min <= max <= num_classes");
  }
  if (num_samples * max_positives < num_classes) {
    throw ValueError("too few samples for every class to appear as a positive");
  }
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw ValueError("noise amplitude must be >= 0");
}

std::vector<CanonicalRegion> canonical_regions(std::size_t num_classes, std::size_t height, std::size_t width) {
  const auto rows = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(num_classes))));
  const auto cols = (num_classes + rows - 1) / rows;
  std::vector<CanonicalRegion> out;
  for (std::size_t c = 0; c < num_classes; ++c) {
    const auto r = c / cols;
    const auto k = c % cols;
    out.push_back({r * height / rows, (r + 1) * height / rows, k * width / cols, (k + 1) * width / cols});
  }
  return out;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finaliser over a combined state
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

}  // namespace

bool texture_on(std::size_t class_index, std::size_t i, std::size_t j) {
  const std::size_t period = 2 + class_index / kTextureKinds;
  switch (class_index % kTextureKinds) {
    case 0:
      return true;
    case 1:
      return i % period == 0;
    case 2:
      return j % period == 0;
    case 3:
      return (i / (period - 1) + j / (period - 1)) % 2 == 0;
    case 4:
      return (i + j) % (period + 1) == 0;
    case 5:
      return (i + (period + 1) * 8 - j % ((period + 1) * 8)) % (period + 1) == 0;
    case 6:
      return i % period == 0 && j % period == 0;
    default:
      return (i % period == 0) != (j % period == 0);
  }
}

namespace {

void render_blob(Tensor& image, std::size_t class_index, const CanonicalRegion& region, const SyntheticSpec& spec,
                 std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> side(spec.blob_min, spec.blob_max);
  const auto jitter = static_cast<long>(spec.jitter);
  std::uniform_int_distribution<long> offset(-jitter, jitter);
  const auto sh = side(rng);
  const auto sw = side(rng);
  const double cr = region.center_row() + static_cast<double>(offset(rng));
  const double cc = region.center_col() + static_cast<double>(offset(rng));
  const auto clamp_start = [](double start, std::size_t extent, std::size_t limit) {
    const long s = std::lround(start);
    return static_cast<std::size_t>(std::clamp<long>(s, 0, static_cast<long>(limit - extent)));
  };
  const auto r0 = clamp_start(cr - 0.5 * static_cast<double>(sh - 1), sh, spec.height);
  const auto c0 = clamp_start(cc - 0.5 * static_cast<double>(sw - 1), sw, spec.width);
  for (std::size_t i = 0; i < sh; ++i) {
    for (std::size_t j = 0; j < sw; ++j) {
      if (texture_on(class_index, i, j)) image.at(0, r0 + i, c0 + j) = 1.0;
    }
  }
}

Sample render_sample(const SyntheticSpec& spec, const std::vector<CanonicalRegion>& regions,
                     const std::vector<std::size_t>& classes, std::mt19937_64& rng) {
  Sample s;
  s.image = Tensor(Shape{1, spec.height, spec.width});
  s.full_labels.assign(spec.num_classes, 0);
  for (const auto c : classes) {
    s.full_labels[c] = 1;
    render_blob(s.image, c, regions[c], spec, rng);
  }
  if (spec.noise > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.noise);
    for (double& v : s.image.data()) v += noise(rng);
  }
  s.observed = LabelVector::from_full(s.full_labels);
  return s;
}

std::vector<std::size_t> draw_classes(const SyntheticSpec& spec, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> count(spec.min_positives, spec.max_positives);
  const auto k = count(rng);
  std::vector<std::size_t> all(spec.num_classes);
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  // partial Fisher-Yates: first k entries are a uniform k-subset
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, all.size() - 1);
    std::swap(all[i], all[pick(rng)]);
  }
  all.resize(k);
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace

Dataset generate_dataset(const SyntheticSpec& spec) {
  spec.validate();
  const auto regions = canonical_regions(spec.num_classes, spec.height, spec.width);
  std::mt19937_64 rng(spec.seed);
  Dataset ds{spec.num_classes, spec.height, spec.width, {}};
  ds.samples.reserve(spec.num_samples);
  for (std::size_t n = 0; n < spec.num_samples; ++n) {
    const auto classes = draw_classes(spec, rng);
    ds.samples.push_back(render_sample(spec, regions, classes, rng));
  }
  // Regenerate for classes that never appeared.
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    const bool present = std::any_of(ds.samples.begin(), ds.samples.end(),
                                     [c](const Sample& s) { return s.full_labels[c] != 0; });
    if (present) continue;
    std::mt19937_64 fix(mix_seed(spec.seed, 0x10000 + c));
    const auto victim = c % ds.samples.size();
    ds.samples[victim] = render_sample(spec, regions, {c}, fix);
  }
  return ds;
}

LabelVector to_single_positive(std::span<const std::uint8_t> full, std::mt19937_64& rng) {
  std::vector<std::size_t> positives;
  for (std::size_t i = 0; i < full.size(); ++i) {
    if (full[i]) positives.push_back(i);
  }
  if (positives.empty()) throw ValueError("single-positive labels need at least one positive");
  std::uniform_int_distribution<std::size_t> pick(0, positives.size() - 1);
  std::vector<LabelState> states(full.size(), LabelState::Unannotated);
  states[positives[pick(rng)]] = LabelState::Positive;
  return LabelVector(std::move(states));
}

LabelVector to_single_positive(std::span<const std::uint8_t> full, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return to_single_positive(full, rng);
}

void make_single_positive(Dataset& dataset, std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, 0x5350));
  for (auto& s : dataset.samples) s.observed = to_single_positive(s.full_labels, rng);
}

DatasetSummary summarize(const Dataset& dataset) {
  DatasetSummary s;
  s.class_positive_counts.assign(dataset.num_classes, 0);
  for (const auto& sample : dataset.samples) {
    for (std::size_t c = 0; c < dataset.num_classes; ++c) s.class_positive_counts[c] += sample.full_labels[c];
    s.mean_observed_positive += static_cast<double>(sample.observed.positives().size());
    s.mean_observed_negative += static_cast<double>(sample.observed.negatives().size());
    s.mean_unannotated += static_cast<double>(sample.observed.unannotated().size());
    if (sample.observed.is_sparse()) ++s.sparse_samples;
  }
  if (!dataset.samples.empty()) {
    const auto n = static_cast<double>(dataset.samples.size());
    s.mean_observed_positive /= n;
    s.mean_observed_negative /= n;
    s.mean_unannotated /= n;
  }
  return s;
}

bool same_contents(const Dataset& a, const Dataset& b) {
  if (a.num_classes != b.num_classes || a.height != b.height || a.width != b.width || a.size() != b.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a.samples[i];
    const auto& y = b.samples[i];
    if (!x.image.same_values(y.image) || x.full_labels != y.full_labels || !(x.observed == y.observed)) return false;
  }
  return true;
}

namespace {
constexpr std::string_view kDatasetMagic = "CAMBDSET";
constexpr std::uint32_t kDatasetVersion = 1;
}  // namespace

std::vector<char> encode_dataset(const Dataset& dataset) {
  detail::ByteWriter w;
  w.magic(kDatasetMagic);
  w.u32(kDatasetVersion);
  w.u64(dataset.num_classes);
  w.u64(dataset.height);
  w.u64(dataset.width);
  w.u64(dataset.size());
  for (const auto& s : dataset.samples) {
    w.f64s(s.image.data());
    for (auto v : s.full_labels) w.u8(v);
    for (auto v : s.observed.states()) w.u8(static_cast<std::uint8_t>(v));
  }
  return w.bytes();
}

Dataset decode_dataset(std::span<const char> bytes) {
  detail::ByteReader r(bytes, "dataset");
  r.expect_magic(kDatasetMagic);
  const auto version = r.u32();
  if (version != kDatasetVersion) throw FormatError("unsupported dataset version " + std::to_string(version));
  Dataset ds;
  ds.num_classes = r.u64();
  ds.height = r.u64();
  ds.width = r.u64();
  const auto n = r.u64();
  const auto per_sample = ds.height * ds.width * sizeof(double) + 2 * ds.num_classes;
  if (ds.num_classes == 0 || per_sample == 0 || n > bytes.size() / per_sample) {
    throw FormatError("dataset: header inconsistent with file size");
  }
  ds.samples.resize(n);
  for (auto& s : ds.samples) {
    s.image = Tensor(Shape{1, ds.height, ds.width});
    r.f64s(s.image.data());
    s.full_labels.resize(ds.num_classes);
    for (auto& v : s.full_labels) {
      v = r.u8();
      if (v > 1) throw FormatError("dataset: full label outside {0,1}");
    }
    std::vector<LabelState> states(ds.num_classes);
    for (auto& v : states) {
      const auto raw = r.u8();
      if (raw > 2) throw FormatError("dataset: unknown observed label state");
      v = static_cast<LabelState>(raw);
    }
    s.observed = LabelVector(std::move(states));
  }
  r.expect_end();
  return ds;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  detail::write_file(path, encode_dataset(dataset));
}

Dataset load_dataset(const std::filesystem::path& path) { return decode_dataset(detail::read_file(path)); }

}  // namespace camboost
