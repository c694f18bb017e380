#include <stdexcept>

#include "tmc/imgproc.hpp"

namespace tmc::img {

namespace {

using u128 = unsigned __int128;

// 192-bit product of a 128-bit and a 64-bit unsigned integer, as (high, low).
struct Wide {
  u128 hi;
  std::uint64_t lo;

  auto operator<=>(const Wide&) const = default;
};

Wide mul(u128 a, std::uint64_t b) {
  const std::uint64_t al = static_cast<std::uint64_t>(a);
  const u128 ah = a >> 64;
  const u128 low = static_cast<u128>(al) * b;
  return {ah * b + (low >> 64), static_cast<std::uint64_t>(low)};
}

// Histograms up to this many pixels are scored exactly.
constexpr std::uint64_t kMaxExactTotal = std::uint64_t{1} << 24;

}  // namespace

// With n0 pixels at or below t, first moment m0 below t, total N and total
// moment M, the between-class variance is
//   (M n0 - m0 N)^2 / (N^2 n0 (N - n0)).
// The N^2 factor is common to every t, so candidates are compared by the
// exact fraction (M n0 - m0 N)^2 / (n0 (N - n0)).
int otsu_threshold(const Histogram& h) {
  if (h.total == 0) throw std::invalid_argument("otsu_threshold: empty histogram");
  if (h.total > kMaxExactTotal) throw std::invalid_argument("otsu_threshold: histogram too large");

  const std::uint64_t n = h.total;
  std::uint64_t moment = 0;
  for (int i = 0; i < 256; ++i) moment += static_cast<std::uint64_t>(i) * h.bins[i];

  int best = -1;
  u128 best_num = 0;
  std::uint64_t best_den = 1;
  std::uint64_t n0 = 0;
  std::uint64_t m0 = 0;
  for (int t = 0; t < 256; ++t) {
    n0 += h.bins[t];
    m0 += static_cast<std::uint64_t>(t) * h.bins[t];
    if (n0 == 0 || n0 == n) continue;
    const __int128 diff = static_cast<__int128>(moment) * n0 - static_cast<__int128>(m0) * n;
    const u128 mag = static_cast<u128>(diff < 0 ? -diff : diff);
    const u128 num = mag * mag;
    const std::uint64_t den = n0 * (n - n0);
    if (best < 0 || mul(num, best_den) > mul(best_num, den)) {
      best = t;
      best_num = num;
      best_den = den;
    }
  }
  if (best < 0) {
    for (int t = 0; t < 256; ++t) {
      if (h.bins[t] != 0) return t;
    }
  }
  return best;
}

BitPlaneStack otsu(const RgbImage& img) {
  BitPlaneStack out(img.height(), img.width(), 3);
  for (int c = 0; c < 3; ++c) {
    const int t = otsu_threshold(channel_histogram(img, c));
    for (int r = 0; r < img.height(); ++r) {
      for (int col = 0; col < img.width(); ++col) {
        out.set(r, col, c, img.at(r, col, c) > t);
      }
    }
  }
  return out;
}

}  // namespace tmc::img
