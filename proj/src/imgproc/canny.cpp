#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "tmc/imgproc.hpp"

namespace tmc::img {

namespace {

constexpr double kSobelX[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
constexpr double kSobelY[3][3] = {{1, 2, 1}, {0, 0, 0}, {-1, -2, -1}};

// Offsets (drow, dcol) of the two neighbours across the edge for each of the
// four quantized gradient directions. gy is positive upwards, so a 45 degree
// gradient points to the upper right.
constexpr int kAcross[4][2][2] = {
    {{0, -1}, {0, 1}},    // 0
    {{-1, 1}, {1, -1}},   // 45
    {{-1, 0}, {1, 0}},    // 90
    {{-1, -1}, {1, 1}},   // 135
};

int quantize_direction(double theta) {
  constexpr double pi = std::numbers::pi;
  if (theta < 0) theta += pi;  // edges are undirected
  if (theta < pi / 8 || theta >= 7 * pi / 8) return 0;
  if (theta < 3 * pi / 8) return 1;
  if (theta < 5 * pi / 8) return 2;
  return 3;
}

std::vector<std::uint8_t> canny_channel(const GrayChannel& ch, const CannyParams& p) {
  const GrayChannel smooth = gaussian_smooth(ch, p.sigma, p.radius);
  const GradientField g = sobel_gradients(smooth);
  const int h = ch.height;
  const int w = ch.width;
  const auto mag = [&](int r, int c) -> double {
    if (r < 0 || r >= h || c < 0 || c >= w) return 0.0;
    return g.magnitude[static_cast<std::size_t>(r) * w + c];
  };

  // 0 = suppressed, 1 = weak, 2 = strong
  std::vector<std::uint8_t> cls(static_cast<std::size_t>(h) * w, 0);
  std::vector<std::size_t> stack;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      const double m = g.magnitude[i];
      if (m < p.low) continue;
      const auto& nb = kAcross[quantize_direction(g.orientation[i])];
      if (m < mag(r + nb[0][0], c + nb[0][1]) || m < mag(r + nb[1][0], c + nb[1][1])) continue;
      if (m >= p.high) {
        cls[i] = 2;
        stack.push_back(i);
      } else {
        cls[i] = 1;
      }
    }
  }

  std::vector<std::uint8_t> edge(cls.size(), 0);
  for (std::size_t i : stack) edge[i] = 1;
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    const int r = static_cast<int>(i / w);
    const int c = static_cast<int>(i % w);
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        const int rr = r + dr;
        const int cc = c + dc;
        if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
        const std::size_t j = static_cast<std::size_t>(rr) * w + cc;
        if (cls[j] == 1 && !edge[j]) {
          edge[j] = 1;
          stack.push_back(j);
        }
      }
    }
  }
  return edge;
}

}  // namespace

GradientField sobel_gradients(const GrayChannel& ch) {
  if (ch.height < 3 || ch.width < 3) {
    throw std::invalid_argument("sobel_gradients: channel must be at least 3x3");
  }
  GradientField g;
  g.height = ch.height;
  g.width = ch.width;
  const std::size_t n = ch.values.size();
  g.gx.resize(n);
  g.gy.resize(n);
  g.magnitude.resize(n);
  g.orientation.resize(n);
  for (int r = 0; r < ch.height; ++r) {
    for (int c = 0; c < ch.width; ++c) {
      double sx = 0.0;
      double sy = 0.0;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const double v = ch.clamped(r + ky - 1, c + kx - 1);
          sx += kSobelX[ky][kx] * v;
          sy += kSobelY[ky][kx] * v;
        }
      }
      const std::size_t i = static_cast<std::size_t>(r) * ch.width + c;
      g.gx[i] = sx;
      g.gy[i] = sy;
      g.magnitude[i] = std::sqrt(sx * sx + sy * sy);
      g.orientation[i] = std::atan2(sy, sx);
    }
  }
  return g;
}

GrayChannel gaussian_smooth(const GrayChannel& ch, double sigma, int radius) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_smooth: sigma must be positive");
  if (radius < 0) throw std::invalid_argument("gaussian_smooth: negative radius");
  const int side = 2 * radius + 1;
  std::vector<double> kernel(static_cast<std::size_t>(side) * side);
  double total = 0.0;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      kernel[static_cast<std::size_t>(dy + radius) * side + dx + radius] = v;
      total += v;
    }
  }
  for (double& v : kernel) v /= total;

  GrayChannel out(ch.height, ch.width);
  for (int r = 0; r < ch.height; ++r) {
    for (int c = 0; c < ch.width; ++c) {
      double acc = 0.0;
      const double* k = kernel.data();
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          acc += *k++ * ch.clamped(r + dy, c + dx);
        }
      }
      out.at(r, c) = acc;
    }
  }
  return out;
}

BitPlaneStack canny(const RgbImage& img, const CannyParams& params) {
  if (!(params.low < params.high)) {
    throw std::invalid_argument("canny: low threshold must be below the high threshold");
  }
  if (!(params.sigma > 0.0)) throw std::invalid_argument("canny: sigma must be positive");
  const auto channels = split_channels(img);
  BitPlaneStack out(img.height(), img.width(), 3);
  for (int c = 0; c < 3; ++c) {
    const auto edge = canny_channel(channels[c], params);
    for (int r = 0; r < img.height(); ++r) {
      for (int col = 0; col < img.width(); ++col) {
        out.set(r, col, c, edge[static_cast<std::size_t>(r) * img.width() + col] != 0);
      }
    }
  }
  return out;
}

}  // namespace tmc::img
