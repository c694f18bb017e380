#pragma once

// Binds one Booleanization technique to its parameters so that specialists,
// caches and manifests can name exactly how their inputs were produced.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tmc/imgproc.hpp"

namespace tmc::img {

// Wire ids; persisted in cache and model files.
enum class Technique : std::uint8_t {
  Canny = 1,
  Hog = 2,
  AdaptiveGaussian = 3,
  AdaptiveMean = 4,
  Otsu = 5,
  Thermometer = 6,
  AdaptiveThermometer = 7,
};

std::string_view technique_name(Technique t);
std::optional<Technique> technique_from_name(std::string_view name);
std::optional<Technique> technique_from_id(std::uint8_t id);
const std::vector<std::string>& technique_names();

struct OtsuParams {};

struct ThermometerParams {
  int levels = kDefaultThermometerLevels;
};

struct AdaptiveThermometerParams {
  int levels = kDefaultThermometerLevels;
  double k = 1.0;
};

// AdaptiveParams appears twice so the alternative index encodes the technique.
struct AdaptiveGaussianParams : AdaptiveParams {};
struct AdaptiveMeanParams : AdaptiveParams {};

class Booleanizer {
 public:
  using Params = std::variant<CannyParams, HogParams, AdaptiveGaussianParams, AdaptiveMeanParams,
                              OtsuParams, ThermometerParams, AdaptiveThermometerParams>;

  Booleanizer() : params_(ThermometerParams{}) {}
  explicit Booleanizer(Params params);

  /// Default parameters for a technique.
  static Booleanizer defaults(Technique t);

  /// Parses "name" or "name:key=value,key=value" (the canonical() form).
  static Booleanizer parse(std::string_view text);

  Technique technique() const;
  const Params& params() const { return params_; }

  /// Stable text form, e.g. "thermometer:levels=8".
  std::string canonical() const;

  /// FNV-1a 64 of canonical().
  std::uint64_t digest() const;

  BitPlaneStack apply(const RgbImage& img) const;

  /// Output geometry {height, width, planes} for an input of the given extent.
  std::array<int, 3> output_shape(int height, int width) const;

  bool operator==(const Booleanizer& other) const { return canonical() == other.canonical(); }

 private:
  Params params_;
};

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string to_hex(std::uint64_t v);

}  // namespace tmc::img
