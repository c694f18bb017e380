#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmc/imgproc.hpp"

namespace tmc::img {

namespace {

// Weights are integers so the block sums are exact; a constant neighbourhood
// then has a weighted mean equal to its value.
constexpr double kWeightScale = 4096.0;

void check_block(int block, const char* who) {
  if (block < 3 || block % 2 == 0) {
    throw std::invalid_argument(std::string(who) + ": block must be odd and >= 3");
  }
}

// Separable sum over a (2r+1)^2 window with border replication and the given
// 1D weights; result is exact.
std::vector<std::int64_t> separable_sum(const RgbImage& img, int channel,
                                        const std::vector<std::int64_t>& w) {
  const int h = img.height();
  const int wd = img.width();
  const int r = static_cast<int>(w.size() / 2);
  std::vector<std::int64_t> horiz(static_cast<std::size_t>(h) * wd);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < wd; ++x) {
      std::int64_t acc = 0;
      for (int d = -r; d <= r; ++d) {
        acc += w[d + r] * img.at(y, std::clamp(x + d, 0, wd - 1), channel);
      }
      horiz[static_cast<std::size_t>(y) * wd + x] = acc;
    }
  }
  std::vector<std::int64_t> out(horiz.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < wd; ++x) {
      std::int64_t acc = 0;
      for (int d = -r; d <= r; ++d) {
        acc += w[d + r] * horiz[static_cast<std::size_t>(std::clamp(y + d, 0, h - 1)) * wd + x];
      }
      out[static_cast<std::size_t>(y) * wd + x] = acc;
    }
  }
  return out;
}

BitPlaneStack threshold_against_local(const RgbImage& img, const std::vector<std::int64_t>& w,
                                      double c) {
  std::int64_t w1 = 0;
  for (auto v : w) w1 += v;
  const double total = static_cast<double>(w1 * w1);
  BitPlaneStack out(img.height(), img.width(), 3);
  for (int ch = 0; ch < 3; ++ch) {
    const auto sums = separable_sum(img, ch, w);
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) {
        const double local = static_cast<double>(sums[static_cast<std::size_t>(y) * img.width() + x]);
        const double t = local / total - c;
        out.set(y, x, ch, img.at(y, x, ch) > t);
      }
    }
  }
  return out;
}

}  // namespace

std::vector<std::int64_t> adaptive_gaussian_weights(int block) {
  check_block(block, "adaptive_gaussian_weights");
  // Same sigma rule OpenCV uses for its adaptive Gaussian method.
  const double sigma = 0.3 * ((block - 1) * 0.5 - 1) + 0.8;
  const int r = block / 2;
  std::vector<std::int64_t> w(block);
  for (int d = -r; d <= r; ++d) {
    const double g = std::exp(-(d * d) / (2.0 * sigma * sigma));
    w[d + r] = std::max<std::int64_t>(1, std::llround(kWeightScale * g));
  }
  return w;
}

BitPlaneStack adaptive_gaussian(const RgbImage& img, const AdaptiveParams& params) {
  check_block(params.block, "adaptive_gaussian");
  return threshold_against_local(img, adaptive_gaussian_weights(params.block), params.c);
}

BitPlaneStack adaptive_mean(const RgbImage& img, const AdaptiveParams& params) {
  check_block(params.block, "adaptive_mean");
  return threshold_against_local(img, std::vector<std::int64_t>(params.block, 1), params.c);
}

}  // namespace tmc::img
