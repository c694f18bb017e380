#include <algorithm>
#include <stdexcept>
#include <string>

#include "tmc/imgproc.hpp"

namespace tmc::img {

RgbImage::RgbImage(int height, int width)
    : height_(height), width_(width), pixels_(static_cast<std::size_t>(height) * width * 3, 0) {
  if (height <= 0 || width <= 0) {
    throw std::invalid_argument("RgbImage: extent must be positive");
  }
}

RgbImage::RgbImage(int height, int width, std::vector<std::uint8_t> interleaved)
    : height_(height), width_(width), pixels_(std::move(interleaved)) {
  if (height <= 0 || width <= 0) {
    throw std::invalid_argument("RgbImage: extent must be positive");
  }
  if (pixels_.size() != static_cast<std::size_t>(height) * width * 3) {
    throw std::invalid_argument("RgbImage: expected " + std::to_string(height * width * 3) +
                                " bytes, got " + std::to_string(pixels_.size()));
  }
}

double GrayChannel::clamped(int row, int col) const {
  row = std::clamp(row, 0, height - 1);
  col = std::clamp(col, 0, width - 1);
  return at(row, col);
}

BitPlaneStack::BitPlaneStack(int height, int width, int planes)
    : height_(height),
      width_(width),
      planes_(planes),
      bits_(static_cast<std::size_t>(height) * width * planes, 0) {
  if (height <= 0 || width <= 0 || planes <= 0) {
    throw std::invalid_argument("BitPlaneStack: extent must be positive");
  }
}

std::array<GrayChannel, 3> split_channels(const RgbImage& img) {
  std::array<GrayChannel, 3> out;
  for (int c = 0; c < 3; ++c) {
    out[c] = GrayChannel(img.height(), img.width());
  }
  for (int r = 0; r < img.height(); ++r) {
    for (int col = 0; col < img.width(); ++col) {
      for (int c = 0; c < 3; ++c) {
        out[c].at(r, col) = img.at(r, col, c);
      }
    }
  }
  return out;
}

RgbImage merge_channels(const std::array<GrayChannel, 3>& planes) {
  const int h = planes[0].height;
  const int w = planes[0].width;
  for (const auto& p : planes) {
    if (p.height != h || p.width != w) {
      throw std::invalid_argument("merge_channels: planes differ in extent");
    }
  }
  RgbImage img(h, w);
  for (int r = 0; r < h; ++r) {
    for (int col = 0; col < w; ++col) {
      for (int c = 0; c < 3; ++c) {
        img.at(r, col, c) = static_cast<std::uint8_t>(std::clamp(planes[c].at(r, col), 0.0, 255.0));
      }
    }
  }
  return img;
}

Histogram channel_histogram(const RgbImage& img, int channel) {
  Histogram h;
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      h.add(img.at(r, c, channel));
    }
  }
  return h;
}

RgbImage hflip(const RgbImage& img) {
  RgbImage out(img.height(), img.width());
  const int w = img.width();
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < w; ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        out.at(r, w - 1 - c, ch) = img.at(r, c, ch);
      }
    }
  }
  return out;
}

}  // namespace tmc::img
