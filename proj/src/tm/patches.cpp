#include <cstring>
#include <stdexcept>
#include <string>

#include "tmc/tm.hpp"

namespace tmc::tm {

PatchGeometry PatchGeometry::make(int height, int width, int planes, int window) {
  if (height <= 0 || width <= 0 || planes <= 0) {
    throw std::invalid_argument("PatchGeometry: extent must be positive");
  }
  if (window < 1 || window > height || window > width) {
    throw std::invalid_argument("PatchGeometry: window " + std::to_string(window) +
                                " does not fit a " + std::to_string(height) + "x" +
                                std::to_string(width) + " input");
  }
  return {height, width, planes, window};
}

std::vector<std::uint8_t> build_literals(std::span<const std::uint8_t> x) {
  std::vector<std::uint8_t> out(x.begin(), x.end());
  out.reserve(2 * x.size());
  for (auto v : x) out.push_back(v ? 0 : 1);
  return out;
}

void PatchSet::fill_features(int p, std::uint8_t* out) const {
  const auto& g = geometry_;
  if (source_.empty()) {
    for (int k = 0; k < g.features(); ++k) out[k] = feature(p, k) ? 1 : 0;
    return;
  }
  const int py = p / g.positions_x();
  const int px = p % g.positions_x();
  const std::size_t run = static_cast<std::size_t>(g.window) * g.planes;
  for (int dy = 0; dy < g.window; ++dy) {
    const std::size_t src = (static_cast<std::size_t>(py + dy) * g.width + px) * g.planes;
    std::memcpy(out + dy * run, source_.data() + src, run);
  }
  std::uint8_t* pos = out + g.content_bits();
  const int row_bits = g.height - g.window;
  for (int j = 0; j < row_bits; ++j) pos[j] = py > j ? 1 : 0;
  for (int j = 0; j < g.width - g.window; ++j) pos[row_bits + j] = px > j ? 1 : 0;
}

PatchSet extract_patches(const img::BitPlaneStack& stack, int window) {
  const auto g = PatchGeometry::make(stack.height(), stack.width(), stack.planes(), window);
  PatchSet out(g);
  out.source_.assign(stack.bits().begin(), stack.bits().end());
  const int ph = g.positions_y();
  const int pw = g.positions_x();
  const int planes = g.planes;
  const int content = g.content_bits();
  const int row_bits = g.height - window;
  const auto bits = stack.bits();
  int k = 0;
  for (int dy = 0; dy < window; ++dy) {
    for (int dx = 0; dx < window; ++dx) {
      for (int b = 0; b < planes; ++b, ++k) {
        for (int py = 0; py < ph; ++py) {
          const std::size_t src = (static_cast<std::size_t>(py + dy) * g.width + dx) * planes + b;
          for (int px = 0; px < pw; ++px) {
            if (bits[src + static_cast<std::size_t>(px) * planes]) out.set_feature(py * pw + px, k);
          }
        }
      }
    }
  }
  // Thermometer-coded position: row bit j is set iff py > j, column likewise.
  for (int py = 0; py < ph; ++py) {
    for (int px = 0; px < pw; ++px) {
      const int p = py * pw + px;
      for (int j = 0; j < py; ++j) out.set_feature(p, content + j);
      for (int j = 0; j < px; ++j) out.set_feature(p, content + row_bits + j);
    }
  }
  return out;
}

}  // namespace tmc::tm
