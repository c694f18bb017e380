#pragma once

// Random-search harness over the specialist hyperparameters: window, clause
// weighting, T and s, with the clause budget held fixed.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tmc/booleanizer.hpp"
#include "tmc/rng.hpp"
#include "tmc/tm.hpp"

namespace tmc::hpo {

struct SearchSpace {
  int window_min = 1;
  int window_max = 32;
  int clauses = 2000;
  int threshold_min = 1;
  int threshold_max = 3000;
  double specificity_min = 1.0;
  double specificity_max = 10.0;
};

/// True when every searched field lies inside the space (window also within
/// the image side).
bool within_bounds(const SearchSpace& space, const tm::TMConfig& config, int image_side);

struct Trial {
  int index = 0;
  tm::TMConfig config;
  int epochs = 0;
  double accuracy = 0.0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
};

class ConfigSampler {
 public:
  virtual ~ConfigSampler() = default;
  virtual tm::TMConfig sample(const SearchSpace& space, int image_side, Rng& rng) = 0;
};

/// Independent uniform draws: window and T as integers, s continuous,
/// weighted as a fair coin. Window is clamped to the image side.
class UniformSampler final : public ConfigSampler {
 public:
  tm::TMConfig sample(const SearchSpace& space, int image_side, Rng& rng) override;
};

tm::TMConfig sample_config(const SearchSpace& space, Rng& rng, int image_side = 32);

struct SearchOptions {
  int trials = 50;
  int epochs = 5;
  std::uint64_t seed = 1;
  int jobs = 1;  // trials run concurrently on up to this many workers
  /// Trial i uses injected[i] instead of a sampled config while i < size.
  std::vector<tm::TMConfig> injected;
  ConfigSampler* sampler = nullptr;  // UniformSampler when null
  std::function<void(const Trial&)> on_trial;
};

struct SearchResult {
  Trial best;
  std::vector<Trial> trials;
};

/// Trains a fresh model per trial on the first 90% of the set and scores it on
/// the last 10%. Trial i trains with seed = options.seed + i. The best trial is
/// the most accurate, ties to the earliest.
SearchResult run_search(const SearchSpace& space, std::span<const img::BitPlaneStack> stacks,
                        std::span<const int> labels, int classes, const img::Booleanizer& binding,
                        const SearchOptions& options);

/// One line-delimited JSON record with fixed-precision numbers.
std::string trial_record(const Trial& t);

/// key=value text form of a config, read back by parse_config.
std::string format_config(const tm::TMConfig& c);
tm::TMConfig parse_config(std::string_view text);
void write_config(const std::filesystem::path& path, const tm::TMConfig& c);
tm::TMConfig read_config(const std::filesystem::path& path);

}  // namespace tmc::hpo
