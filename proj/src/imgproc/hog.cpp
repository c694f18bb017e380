#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "tmc/imgproc.hpp"

namespace tmc::img {

namespace {

struct PixelGradient {
  double magnitude;
  double angle;  // unsigned, [0, pi)
};

// Centred [-1 0 1] differences; the outermost rows/columns have zero
// gradient along the axis that would read outside the image. Per pixel the
// channel with the largest magnitude wins, ties to the lower channel index.
std::vector<PixelGradient> dominant_gradients(const RgbImage& img) {
  const int h = img.height();
  const int w = img.width();
  std::vector<PixelGradient> out(static_cast<std::size_t>(h) * w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      int best_gx = 0;
      int best_gy = 0;
      int best_sq = -1;
      for (int ch = 0; ch < 3; ++ch) {
        const int gx = (c > 0 && c < w - 1) ? img.at(r, c + 1, ch) - img.at(r, c - 1, ch) : 0;
        const int gy = (r > 0 && r < h - 1) ? img.at(r + 1, c, ch) - img.at(r - 1, c, ch) : 0;
        const int sq = gx * gx + gy * gy;
        if (sq > best_sq) {
          best_sq = sq;
          best_gx = gx;
          best_gy = gy;
        }
      }
      double angle = std::atan2(static_cast<double>(best_gy), static_cast<double>(best_gx));
      if (angle < 0) angle += std::numbers::pi;
      if (angle >= std::numbers::pi) angle -= std::numbers::pi;
      out[static_cast<std::size_t>(r) * w + c] = {std::sqrt(static_cast<double>(best_sq)), angle};
    }
  }
  return out;
}

}  // namespace

std::vector<double> hog_features(const RgbImage& img, const HogParams& p) {
  if (p.cell <= 0 || p.block <= 0 || p.bins <= 0) {
    throw std::invalid_argument("hog_features: cell, block and bins must be positive");
  }
  if (img.height() % p.cell != 0 || img.width() % p.cell != 0) {
    throw std::invalid_argument("hog_features: image extent is not a whole number of cells");
  }
  const int cells_y = img.height() / p.cell;
  const int cells_x = img.width() / p.cell;
  if (cells_y < p.block || cells_x < p.block) {
    throw std::invalid_argument("hog_features: fewer cells than one block");
  }

  const auto grad = dominant_gradients(img);
  const double bin_width = std::numbers::pi / p.bins;

  // Bin b is centred on b * bin_width; votes split linearly between the two
  // nearest centres, wrapping at pi.
  std::vector<double> cells(static_cast<std::size_t>(cells_y) * cells_x * p.bins, 0.0);
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      const auto& g = grad[static_cast<std::size_t>(r) * img.width() + c];
      const double pos = g.angle / bin_width;
      const double lower = std::floor(pos);
      const double frac = pos - lower;
      const int b0 = static_cast<int>(lower) % p.bins;
      const int b1 = (b0 + 1) % p.bins;
      double* hist = &cells[(static_cast<std::size_t>(r / p.cell) * cells_x + c / p.cell) * p.bins];
      hist[b0] += g.magnitude * (1.0 - frac);
      hist[b1] += g.magnitude * frac;
    }
  }

  const int blocks_y = cells_y - p.block + 1;
  const int blocks_x = cells_x - p.block + 1;
  const std::size_t block_len = static_cast<std::size_t>(p.block) * p.block * p.bins;
  std::vector<double> features;
  features.reserve(static_cast<std::size_t>(blocks_y) * blocks_x * block_len);
  std::vector<double> v(block_len);
  for (int by = 0; by < blocks_y; ++by) {
    for (int bx = 0; bx < blocks_x; ++bx) {
      std::size_t k = 0;
      for (int cy = by; cy < by + p.block; ++cy) {
        for (int cx = bx; cx < bx + p.block; ++cx) {
          const double* hist = &cells[(static_cast<std::size_t>(cy) * cells_x + cx) * p.bins];
          for (int b = 0; b < p.bins; ++b) v[k++] = hist[b];
        }
      }
      double sq = 0.0;
      for (double x : v) sq += x * x;
      const double norm = std::sqrt(sq + p.epsilon * p.epsilon);
      for (double x : v) features.push_back(x / norm);
    }
  }
  return features;
}

BitPlaneStack hog_booleanize(std::span<const double> features) {
  if (features.empty()) throw std::invalid_argument("hog_booleanize: empty feature vector");
  BitPlaneStack out(1, 1, static_cast<int>(features.size()));
  for (std::size_t i = 0; i < features.size(); ++i) {
    out.set(0, 0, static_cast<int>(i), features[i] >= kHogBooleanThreshold);
  }
  return out;
}

}  // namespace tmc::img
