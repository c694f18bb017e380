#pragma once

// CIFAR-10 ingestion, class subsets, flip augmentation and the Booleanized
// tensor cache (TMBX files).

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tmc/booleanizer.hpp"
#include "tmc/imgproc.hpp"

namespace tmc::data {

inline constexpr int kCifarSide = 32;
inline constexpr int kCifarClasses = 10;
inline constexpr std::size_t kCifarRecordBytes = 1 + 3 * kCifarSide * kCifarSide;

/// Label order of the CIFAR-10 binary distribution.
inline constexpr std::array<std::string_view, kCifarClasses> kCifarClassNames = {
    "airplane", "automobile", "bird", "cat", "deer", "dog", "frog", "horse", "ship", "truck"};

enum class Provenance : std::uint8_t { Original = 0, Augmented = 1 };

struct LabeledDataset {
  std::vector<img::RgbImage> images;
  std::vector<int> labels;
  std::vector<Provenance> provenance;

  std::size_t size() const { return images.size(); }
  bool empty() const { return images.empty(); }
  void add(img::RgbImage image, int label, Provenance p = Provenance::Original) {
    images.push_back(std::move(image));
    labels.push_back(label);
    provenance.push_back(p);
  }
};

/// Records of {label byte, 1024 R, 1024 G, 1024 B bytes}. Throws
/// std::runtime_error naming the offending record on a bad length or label.
LabeledDataset read_cifar10_bin(std::span<const std::uint8_t> bytes);
LabeledDataset read_cifar10_files(std::span<const std::filesystem::path> paths);
std::vector<std::uint8_t> write_cifar10_bin(const LabeledDataset& ds);

/// Every original followed by its horizontal flip, same label.
LabeledDataset augment(const LabeledDataset& ds);

/// Keeps items whose label is in `classes` (first `per_class` of each, 0 = all),
/// relabelled to their index in `classes`. Input order is preserved.
LabeledDataset select_classes(const LabeledDataset& ds, std::span<const int> classes,
                              std::size_t per_class = 0);

LabeledDataset slice(const LabeledDataset& ds, std::size_t begin, std::size_t end);

/// Order- and content-sensitive FNV-1a 64 digest.
std::uint64_t dataset_digest(const LabeledDataset& ds);

// ---------------------------------------------------------------------------
// TMBX cache

struct BooleanizedSet {
  img::Booleanizer booleanizer;
  int height = 0;
  int width = 0;
  int planes = 0;
  std::vector<img::BitPlaneStack> stacks;
};

/// Header {"TMBX", u16 version, u8 technique, u64 parameter digest, u32 count,
/// u16 H, u16 W, u16 planes}, then per image plane-major bits, each row packed
/// LSB-first and padded to a whole byte.
std::vector<std::uint8_t> encode_cache(const BooleanizedSet& set);

/// Decodes a cache written for `expected`; nullopt when the technique or
/// parameter digest differ or the payload size disagrees with the header.
std::optional<BooleanizedSet> decode_cache(std::span<const std::uint8_t> bytes,
                                           const img::Booleanizer& expected);

std::filesystem::path cache_path(const std::filesystem::path& dir, const img::Booleanizer& b,
                                 std::uint64_t dataset_digest);

/// TMC_CACHE_DIR, if set and non-empty.
std::optional<std::filesystem::path> cache_dir_from_env();

struct BooleanizeResult {
  BooleanizedSet set;
  bool cache_hit = false;
  std::optional<std::filesystem::path> path;
};

/// Applies the Booleanizer to every image. With a cache directory the result
/// is read from, or written to, a file keyed by technique, parameter digest
/// and dataset digest; unreadable or mismatching caches are recomputed.
BooleanizeResult booleanize_dataset(const LabeledDataset& ds, const img::Booleanizer& b,
                                    const std::optional<std::filesystem::path>& cache_dir = std::nullopt,
                                    int jobs = 1);

}  // namespace tmc::data
