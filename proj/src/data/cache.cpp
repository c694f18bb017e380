#include <cstdlib>
#include <stdexcept>

#include "tmc/binary_io.hpp"
#include "tmc/data.hpp"
#include "tmc/parallel.hpp"

namespace tmc::data {

namespace {

constexpr std::uint16_t kCacheVersion = 1;

std::size_t payload_bytes(int h, int w, int planes) {
  return static_cast<std::size_t>(planes) * h * ((w + 7) / 8);
}

}  // namespace

std::vector<std::uint8_t> encode_cache(const BooleanizedSet& set) {
  io::ByteWriter out;
  out.text("TMBX");
  out.u16(kCacheVersion);
  out.u8(static_cast<std::uint8_t>(set.booleanizer.technique()));
  out.u64(set.booleanizer.digest());
  out.u32(static_cast<std::uint32_t>(set.stacks.size()));
  out.u16(static_cast<std::uint16_t>(set.height));
  out.u16(static_cast<std::uint16_t>(set.width));
  out.u16(static_cast<std::uint16_t>(set.planes));
  const int row_bytes = (set.width + 7) / 8;
  std::vector<std::uint8_t> row(row_bytes);
  for (const auto& s : set.stacks) {
    if (s.height() != set.height || s.width() != set.width || s.planes() != set.planes) {
      throw std::invalid_argument("encode_cache: stack geometry differs from the set");
    }
    for (int p = 0; p < set.planes; ++p) {
      for (int r = 0; r < set.height; ++r) {
        std::fill(row.begin(), row.end(), 0);
        for (int c = 0; c < set.width; ++c) {
          if (s.get(r, c, p)) row[c >> 3] |= static_cast<std::uint8_t>(1U << (c & 7));
        }
        out.bytes(row);
      }
    }
  }
  return out.take();
}

std::optional<BooleanizedSet> decode_cache(std::span<const std::uint8_t> bytes,
                                           const img::Booleanizer& expected) {
  try {
    io::ByteReader in(bytes);
    if (in.text(4) != "TMBX" || in.u16() != kCacheVersion) return std::nullopt;
    if (in.u8() != static_cast<std::uint8_t>(expected.technique())) return std::nullopt;
    if (in.u64() != expected.digest()) return std::nullopt;
    BooleanizedSet set;
    set.booleanizer = expected;
    const std::uint32_t count = in.u32();
    set.height = in.u16();
    set.width = in.u16();
    set.planes = in.u16();
    if (set.height == 0 || set.width == 0 || set.planes == 0) return std::nullopt;
    if (in.remaining() != count * payload_bytes(set.height, set.width, set.planes)) return std::nullopt;
    set.stacks.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
      img::BitPlaneStack s(set.height, set.width, set.planes);
      for (int p = 0; p < set.planes; ++p) {
        for (int r = 0; r < set.height; ++r) {
          const auto row = in.bytes(static_cast<std::size_t>((set.width + 7) / 8));
          for (int c = 0; c < set.width; ++c) s.set(r, c, p, (row[c >> 3] >> (c & 7)) & 1U);
        }
      }
      set.stacks.push_back(std::move(s));
    }
    return set;
  } catch (const std::runtime_error&) {
    return std::nullopt;
  }
}

std::filesystem::path cache_path(const std::filesystem::path& dir, const img::Booleanizer& b,
                                 std::uint64_t digest) {
  return dir / (std::string(img::technique_name(b.technique())) + "-" + img::to_hex(b.digest()) + "-" +
                img::to_hex(digest) + ".tmbx");
}

std::optional<std::filesystem::path> cache_dir_from_env() {
  const char* v = std::getenv("TMC_CACHE_DIR");
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::filesystem::path(v);
}

BooleanizeResult booleanize_dataset(const LabeledDataset& ds, const img::Booleanizer& b,
                                    const std::optional<std::filesystem::path>& cache_dir, int jobs) {
  if (ds.empty()) throw std::invalid_argument("booleanize_dataset: empty dataset");
  BooleanizeResult result;
  const auto shape = b.output_shape(ds.images[0].height(), ds.images[0].width());
  if (cache_dir) {
    result.path = cache_path(*cache_dir, b, dataset_digest(ds));
    if (std::filesystem::exists(*result.path)) {
      auto cached = decode_cache(io::read_file(*result.path), b);
      if (cached && cached->stacks.size() == ds.size() && cached->height == shape[0] &&
          cached->width == shape[1] && cached->planes == shape[2]) {
        result.set = std::move(*cached);
        result.cache_hit = true;
        return result;
      }
    }
  }
  result.set.booleanizer = b;
  result.set.height = shape[0];
  result.set.width = shape[1];
  result.set.planes = shape[2];
  result.set.stacks.resize(ds.size());
  parallel_for(ds.size(), jobs, [&](std::size_t i) { result.set.stacks[i] = b.apply(ds.images[i]); });
  for (const auto& s : result.set.stacks) {
    if (s.height() != shape[0] || s.width() != shape[1] || s.planes() != shape[2]) {
      throw std::invalid_argument("booleanize_dataset: images differ in extent");
    }
  }
  if (result.path) io::write_file_atomic(*result.path, encode_cache(result.set));
  return result;
}

}  // namespace tmc::data
