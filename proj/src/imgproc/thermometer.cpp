#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tmc/imgproc.hpp"

namespace tmc::img {

namespace {

BitPlaneStack encode_with(const RgbImage& img, const std::array<ThresholdSet, 3>& per_channel) {
  const int t = static_cast<int>(per_channel[0].size());
  BitPlaneStack out(img.height(), img.width(), 3 * t);
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        const double v = img.at(r, c, ch);
        const auto& th = per_channel[ch];
        for (int i = 0; i < t; ++i) out.set(r, c, ch * t + i, !(v > th[i]));
      }
    }
  }
  return out;
}

// Pixel statistics over the integer levels inside the real interval [lo, hi].
struct RangeStats {
  std::uint64_t count = 0;
  std::uint64_t sum = 0;
  unsigned __int128 sum_sq = 0;

  double mean() const { return static_cast<double>(sum) / static_cast<double>(count); }
  double stddev() const {
    const auto n = static_cast<unsigned __int128>(count);
    const auto s = static_cast<unsigned __int128>(sum);
    const auto spread = n * sum_sq - s * s;  // n^2 * variance, exact and >= 0
    return std::sqrt(static_cast<double>(spread)) / static_cast<double>(count);
  }
};

RangeStats range_stats(const Histogram& h, double lo, double hi) {
  RangeStats st;
  const double first = std::max(0.0, std::ceil(lo));
  const double last = std::min(255.0, std::floor(hi));
  for (int i = static_cast<int>(first); i <= static_cast<int>(last) && first <= last; ++i) {
    const std::uint64_t c = h.bins[i];
    st.count += c;
    st.sum += c * static_cast<std::uint64_t>(i);
    st.sum_sq += static_cast<unsigned __int128>(c) * static_cast<unsigned>(i * i);
  }
  return st;
}

double midpoint(double lo, double hi) { return std::clamp((lo + hi) / 2.0, 0.0, 255.0); }

// Histogram-weighted mean of a tail, or its midpoint when the tail is empty.
double tail_threshold(const Histogram& h, double lo, double hi) {
  const RangeStats st = range_stats(h, lo, hi);
  return st.count == 0 ? midpoint(lo, hi) : st.mean();
}

}  // namespace

ThresholdSet thermometer_thresholds(int levels) {
  if (levels < 1) throw std::invalid_argument("thermometer: need at least one threshold");
  ThresholdSet th(levels);
  for (int i = 0; i < levels; ++i) th[i] = i * 255.0 / levels;
  return th;
}

std::vector<std::uint8_t> thermometer_code(double value, std::span<const double> thresholds) {
  std::vector<std::uint8_t> code(thresholds.size());
  for (std::size_t i = 0; i < thresholds.size(); ++i) code[i] = value > thresholds[i] ? 0 : 1;
  return code;
}

BitPlaneStack thermometer_encode(const RgbImage& img, int levels) {
  const ThresholdSet th = thermometer_thresholds(levels);
  return encode_with(img, {th, th, th});
}

ThresholdSet multilevel_thresholds(const Histogram& h, int count, double k) {
  if (count < 2 || count % 2 != 0) {
    throw std::invalid_argument("multilevel_thresholds: threshold count must be even and >= 2");
  }
  if (!(k > 0.0)) throw std::invalid_argument("multilevel_thresholds: k must be positive");
  if (h.total == 0) throw std::invalid_argument("multilevel_thresholds: empty histogram");

  ThresholdSet out;
  out.reserve(count);
  double a = 0.0;
  double b = 255.0;
  const int rounds = count / 2;
  for (int round = 0; round < rounds; ++round) {
    const RangeStats st = a <= b ? range_stats(h, a, b) : RangeStats{};
    if (st.count == 0) {
      // Range collapsed: nothing left to split.
      out.push_back(midpoint(a, b));
      out.push_back(midpoint(a, b));
      continue;
    }
    const double mu = st.mean();
    const bool last = round == rounds - 1;
    const double sigma = st.stddev();
    const double t1 = last ? mu : mu - k * sigma;
    const double t2 = last ? mu + 1.0 : mu + k * sigma;
    out.push_back(tail_threshold(h, a, t1));
    out.push_back(tail_threshold(h, t2, b));
    a = t1 + 1.0;
    b = t2 - 1.0;
  }
  for (double& t : out) t = std::clamp(t, 0.0, 255.0);
  std::sort(out.begin(), out.end());
  return out;
}

BitPlaneStack adaptive_thermometer_encode(const RgbImage& img, int count, double k) {
  std::array<ThresholdSet, 3> th;
  for (int c = 0; c < 3; ++c) th[c] = multilevel_thresholds(channel_histogram(img, c), count, k);
  return encode_with(img, th);
}

}  // namespace tmc::img
