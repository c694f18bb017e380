#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>

#include "tmc/binary_io.hpp"
#include "tmc/data.hpp"

namespace tmc::data {

namespace {

constexpr int kPlane = kCifarSide * kCifarSide;

}  // namespace

LabeledDataset read_cifar10_bin(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % kCifarRecordBytes != 0) {
    throw std::runtime_error("CIFAR-10: " + std::to_string(bytes.size()) +
                             " bytes is not a whole number of 3073-byte records");
  }
  LabeledDataset ds;
  const std::size_t n = bytes.size() / kCifarRecordBytes;
  ds.images.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto rec = bytes.subspan(i * kCifarRecordBytes, kCifarRecordBytes);
    if (rec[0] >= kCifarClasses) {
      throw std::runtime_error("CIFAR-10: record " + std::to_string(i) + " has label " +
                               std::to_string(rec[0]));
    }
    std::vector<std::uint8_t> px(3 * kPlane);
    for (int p = 0; p < kPlane; ++p) {
      for (int c = 0; c < 3; ++c) px[3 * p + c] = rec[1 + c * kPlane + p];
    }
    ds.add(img::RgbImage(kCifarSide, kCifarSide, std::move(px)), rec[0]);
  }
  return ds;
}

LabeledDataset read_cifar10_files(std::span<const std::filesystem::path> paths) {
  LabeledDataset all;
  for (const auto& path : paths) {
    auto part = read_cifar10_bin(io::read_file(path));
    for (std::size_t i = 0; i < part.size(); ++i) all.add(std::move(part.images[i]), part.labels[i]);
  }
  return all;
}

std::vector<std::uint8_t> write_cifar10_bin(const LabeledDataset& ds) {
  std::vector<std::uint8_t> out;
  out.reserve(ds.size() * kCifarRecordBytes);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& im = ds.images[i];
    if (im.height() != kCifarSide || im.width() != kCifarSide) {
      throw std::invalid_argument("CIFAR-10 records must be 32x32");
    }
    out.push_back(static_cast<std::uint8_t>(ds.labels[i]));
    for (int c = 0; c < 3; ++c) {
      for (int r = 0; r < kCifarSide; ++r) {
        for (int col = 0; col < kCifarSide; ++col) out.push_back(im.at(r, col, c));
      }
    }
  }
  return out;
}

LabeledDataset augment(const LabeledDataset& ds) {
  LabeledDataset out;
  out.images.reserve(2 * ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out.add(ds.images[i], ds.labels[i], ds.provenance[i]);
    out.add(img::hflip(ds.images[i]), ds.labels[i], Provenance::Augmented);
  }
  return out;
}

LabeledDataset select_classes(const LabeledDataset& ds, std::span<const int> classes, std::size_t per_class) {
  std::map<int, int> index;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (!index.emplace(classes[i], static_cast<int>(i)).second) {
      throw std::invalid_argument("select_classes: duplicate class " + std::to_string(classes[i]));
    }
  }
  std::vector<std::size_t> taken(classes.size(), 0);
  LabeledDataset out;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto it = index.find(ds.labels[i]);
    if (it == index.end()) continue;
    if (per_class != 0 && taken[it->second] >= per_class) continue;
    ++taken[it->second];
    out.add(ds.images[i], it->second, ds.provenance[i]);
  }
  return out;
}

LabeledDataset slice(const LabeledDataset& ds, std::size_t begin, std::size_t end) {
  end = std::min(end, ds.size());
  LabeledDataset out;
  for (std::size_t i = begin; i < end; ++i) out.add(ds.images[i], ds.labels[i], ds.provenance[i]);
  return out;
}

std::uint64_t dataset_digest(const LabeledDataset& ds) {
  std::uint64_t h = img::fnv1a64("tmc-dataset");
  auto mix = [&h](std::uint64_t v) {
    const char bytes[8] = {
        static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16), static_cast<char>(v >> 24),
        static_cast<char>(v >> 32), static_cast<char>(v >> 40), static_cast<char>(v >> 48), static_cast<char>(v >> 56)};
    h = img::fnv1a64(std::string_view(bytes, 8), h);
  };
  mix(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& im = ds.images[i];
    mix(static_cast<std::uint64_t>(ds.labels[i]));
    mix(static_cast<std::uint64_t>(im.height()) << 32 | static_cast<std::uint32_t>(im.width()));
    const auto px = im.pixels();
    h = img::fnv1a64(std::string_view(reinterpret_cast<const char*>(px.data()), px.size()), h);
  }
  return h;
}

}  // namespace tmc::data
