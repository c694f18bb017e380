#pragma once

// Image Booleanization: seven encoders that turn 8-bit RGB images into
// Boolean bit-plane stacks, plus horizontal flipping for augmentation.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tmc::img {

/// 8-bit RGB image, channels interleaved, row-major.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int height, int width);
  RgbImage(int height, int width, std::vector<std::uint8_t> interleaved);

  int height() const { return height_; }
  int width() const { return width_; }
  bool empty() const { return pixels_.empty(); }

  std::uint8_t at(int row, int col, int channel) const {
    return pixels_[(static_cast<std::size_t>(row) * width_ + col) * 3 + channel];
  }
  std::uint8_t& at(int row, int col, int channel) {
    return pixels_[(static_cast<std::size_t>(row) * width_ + col) * 3 + channel];
  }

  std::span<const std::uint8_t> pixels() const { return pixels_; }

  bool operator==(const RgbImage&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Single-channel plane. Values are reals so smoothed intermediates fit too.
struct GrayChannel {
  int height = 0;
  int width = 0;
  std::vector<double> values;

  GrayChannel() = default;
  GrayChannel(int h, int w, double fill = 0.0)
      : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {}

  double at(int row, int col) const { return values[static_cast<std::size_t>(row) * width + col]; }
  double& at(int row, int col) { return values[static_cast<std::size_t>(row) * width + col]; }

  // Border-replicated access.
  double clamped(int row, int col) const;
};

struct GradientField {
  int height = 0;
  int width = 0;
  std::vector<double> gx;
  std::vector<double> gy;
  std::vector<double> magnitude;
  std::vector<double> orientation;  // radians, atan2(gy, gx)
};

/// H x W x B Boolean tensor. Bits are stored one byte per element,
/// index ((row * W) + col) * B + plane.
class BitPlaneStack {
 public:
  BitPlaneStack() = default;
  BitPlaneStack(int height, int width, int planes);

  int height() const { return height_; }
  int width() const { return width_; }
  int planes() const { return planes_; }
  std::size_t size() const { return bits_.size(); }

  bool get(int row, int col, int plane) const { return bits_[index(row, col, plane)] != 0; }
  void set(int row, int col, int plane, bool v) { bits_[index(row, col, plane)] = v ? 1 : 0; }

  std::span<const std::uint8_t> bits() const { return bits_; }
  std::span<std::uint8_t> bits() { return bits_; }

  bool operator==(const BitPlaneStack&) const = default;

 private:
  std::size_t index(int row, int col, int plane) const {
    return (static_cast<std::size_t>(row) * width_ + col) * planes_ + plane;
  }

  int height_ = 0;
  int width_ = 0;
  int planes_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct Histogram {
  std::array<std::uint64_t, 256> bins{};
  std::uint64_t total = 0;

  void add(std::uint8_t v, std::uint64_t count = 1) {
    bins[v] += count;
    total += count;
  }
};

using ThresholdSet = std::vector<double>;

// ---------------------------------------------------------------------------
// Channel plumbing

std::array<GrayChannel, 3> split_channels(const RgbImage& img);
RgbImage merge_channels(const std::array<GrayChannel, 3>& planes);
Histogram channel_histogram(const RgbImage& img, int channel);

RgbImage hflip(const RgbImage& img);

// ---------------------------------------------------------------------------
// Edges

/// 3x3 Sobel correlation with border replication:
///   Kx = [-1 0 1; -2 0 2; -1 0 1],  Ky = [1 2 1; 0 0 0; -1 -2 -1].
/// Throws std::invalid_argument when the channel is smaller than 3x3.
GradientField sobel_gradients(const GrayChannel& ch);

/// Normalized 2D Gaussian smoothing with a (2*radius+1)^2 kernel, border replicated.
GrayChannel gaussian_smooth(const GrayChannel& ch, double sigma, int radius);

struct CannyParams {
  double sigma = 1.4;
  int radius = 2;  // 5x5 kernel
  double low = 100.0;
  double high = 200.0;
};

/// Per-channel Canny edge map: smoothing, Sobel gradients, non-maximum
/// suppression along the quantized orientation, double threshold and
/// 8-connected hysteresis. One plane per channel.
BitPlaneStack canny(const RgbImage& img, const CannyParams& params = {});

// ---------------------------------------------------------------------------
// Local thresholding

struct AdaptiveParams {
  int block = 11;
  double c = 2.0;
};

/// Integer Gaussian window weights (separable, 1D) used by adaptive_gaussian.
std::vector<std::int64_t> adaptive_gaussian_weights(int block);

/// bit = intensity > WM - c, WM the Gaussian-weighted block mean.
BitPlaneStack adaptive_gaussian(const RgbImage& img, const AdaptiveParams& params = {});

/// bit = intensity > mean - c over the block x block neighbourhood.
BitPlaneStack adaptive_mean(const RgbImage& img, const AdaptiveParams& params = {});

// ---------------------------------------------------------------------------
// Otsu

/// Level maximizing the between-class variance; smallest level on ties.
/// A histogram with a single populated level returns that level.
int otsu_threshold(const Histogram& h);

BitPlaneStack otsu(const RgbImage& img);

// ---------------------------------------------------------------------------
// HOG

struct HogParams {
  int cell = 4;
  int block = 2;
  int bins = 9;
  double epsilon = 1e-5;
};

inline constexpr double kHogBooleanThreshold = 0.1;

std::vector<double> hog_features(const RgbImage& img, const HogParams& params = {});

/// Feature vector as a single-pixel stack: 1 x 1 x n, bit = v >= 0.1.
BitPlaneStack hog_booleanize(std::span<const double> features);

// ---------------------------------------------------------------------------
// Thermometers

inline constexpr int kDefaultThermometerLevels = 8;

/// Evenly spaced cut points (i - 1) * 255 / t, i = 1..t.
ThresholdSet thermometer_thresholds(int levels);

/// Thermometer code of a single value: bit i is 0 iff value > thresholds[i].
std::vector<std::uint8_t> thermometer_code(double value, std::span<const double> thresholds);

/// 3t planes ordered R bits, G bits, B bits.
BitPlaneStack thermometer_encode(const RgbImage& img, int levels = kDefaultThermometerLevels);

/// Iterative mean/std narrowing producing n sorted thresholds in [0, 255].
ThresholdSet multilevel_thresholds(const Histogram& h, int count, double k = 1.0);

/// Per-channel multilevel thresholds, then thermometer coding; 3n planes.
BitPlaneStack adaptive_thermometer_encode(const RgbImage& img, int count, double k = 1.0);

}  // namespace tmc::img
