#pragma once

// Shared test data: synthetic labelled sets, scratch directories and
// randomly initialised models.

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tmc/data.hpp"
#include "tmc/tm.hpp"

namespace fixture {

/// A scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// 32x32 RGB images with noise; label 0 carries a bright horizontal band,
/// label 1 a vertical one. Labels alternate.
tmc::data::LabeledDataset band_dataset(int count, std::uint64_t seed);

/// 4x4 single-plane stacks: vertical stripe (label 0) or horizontal stripe
/// (label 1) at a random offset, with one flipped background bit.
struct StripeSet {
  std::vector<tmc::img::BitPlaneStack> stacks;
  std::vector<int> labels;
};
StripeSet stripe_set(int count, std::uint64_t seed);

/// Model over an H x W x B input with random automaton states and weights.
/// `empty_share` of the clauses have every literal excluded.
tmc::tm::SpecialistModel random_model(int height, int width, int planes, int window, int classes,
                                      int clauses, std::mt19937_64& gen, double empty_share = 0.2);

/// Stack whose bits are the binary digits of `code` in storage order.
tmc::img::BitPlaneStack stack_from_code(int height, int width, int planes, std::uint64_t code);

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace fixture
