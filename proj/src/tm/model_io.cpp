#include <cmath>
#include <stdexcept>
#include <string>

#include "tmc/binary_io.hpp"
#include "tmc/tm.hpp"

namespace tmc::tm {

// TMSP layout, little-endian:
//   "TMSP" u16 version, u32 classes, u32 clauses, u32 T, u32 s*1000, u16 window,
//   u8 weighted, u16 N, u32 literal count, u16 H, u16 W, u16 planes,
//   u8 technique id, u64 parameter digest, u16 length + binding text, u64 seed
//   then per class, per clause: u8 polarity, u32 weight, 2o automaton states
//   (u8 holding state - 1 when N <= 128, u16 otherwise).

namespace {

constexpr std::uint16_t kVersion = 1;

}  // namespace

std::vector<std::uint8_t> SpecialistModel::serialize() const {
  io::ByteWriter w;
  w.text("TMSP");
  w.u16(kVersion);
  w.u32(static_cast<std::uint32_t>(classes()));
  w.u32(static_cast<std::uint32_t>(config_.clauses));
  w.u32(static_cast<std::uint32_t>(config_.threshold));
  w.u32(static_cast<std::uint32_t>(std::llround(config_.specificity * 1000.0)));
  w.u16(static_cast<std::uint16_t>(config_.window));
  w.u8(config_.weighted ? 1 : 0);
  w.u16(static_cast<std::uint16_t>(config_.states_per_action));
  w.u32(static_cast<std::uint32_t>(geometry_.literals()));
  w.u16(static_cast<std::uint16_t>(geometry_.height));
  w.u16(static_cast<std::uint16_t>(geometry_.width));
  w.u16(static_cast<std::uint16_t>(geometry_.planes));
  w.u8(static_cast<std::uint8_t>(binding_.technique()));
  w.u64(binding_.digest());
  const std::string text = binding_.canonical();
  w.u16(static_cast<std::uint16_t>(text.size()));
  w.text(text);
  w.u64(config_.seed);

  const bool narrow = config_.states_per_action <= 128;
  for (const auto& bank : banks_) {
    for (int j = 0; j < bank.size(); ++j) {
      w.u8(static_cast<std::uint8_t>(bank.polarity(j)));
      w.u32(bank.weight(j));
      for (int k = 0; k < bank.literals(); ++k) {
        if (narrow) {
          w.u8(static_cast<std::uint8_t>(bank.state(j, k) - 1));
        } else {
          w.u16(static_cast<std::uint16_t>(bank.state(j, k)));
        }
      }
    }
  }
  return w.take();
}

SpecialistModel SpecialistModel::deserialize(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  if (r.text(4) != "TMSP") throw std::runtime_error("not a TMSP model file");
  if (const auto v = r.u16(); v != kVersion) {
    throw std::runtime_error("unsupported TMSP version " + std::to_string(v));
  }
  const int classes = static_cast<int>(r.u32());
  TMConfig cfg;
  cfg.clauses = static_cast<int>(r.u32());
  cfg.threshold = static_cast<int>(r.u32());
  cfg.specificity = r.u32() / 1000.0;
  cfg.window = r.u16();
  cfg.weighted = r.u8() != 0;
  cfg.states_per_action = r.u16();
  const auto literal_count = r.u32();
  const int h = r.u16();
  const int w = r.u16();
  const int planes = r.u16();
  const auto technique_id = r.u8();
  const auto digest = r.u64();
  const auto text_len = r.u16();
  const auto binding = img::Booleanizer::parse(r.text(text_len));
  cfg.seed = r.u64();
  if (static_cast<std::uint8_t>(binding.technique()) != technique_id || binding.digest() != digest) {
    throw std::runtime_error("TMSP: Booleanizer binding does not match its digest");
  }

  SpecialistModel model(cfg, classes, {h, w, planes}, binding);
  if (static_cast<std::uint32_t>(model.geometry().literals()) != literal_count) {
    throw std::runtime_error("TMSP: literal count does not match the stored geometry");
  }
  const bool narrow = cfg.states_per_action <= 128;
  for (auto& bank : model.banks_) {
    for (int j = 0; j < bank.size(); ++j) {
      if (r.u8() != static_cast<std::uint8_t>(bank.polarity(j))) {
        throw std::runtime_error("TMSP: clause polarity out of order");
      }
      bank.set_weight(j, r.u32());
      for (int k = 0; k < bank.literals(); ++k) {
        const int state = narrow ? r.u8() + 1 : r.u16();
        bank.set_state(j, k, state);
      }
      bank.refresh(j);
    }
  }
  if (r.remaining() != 0) throw std::runtime_error("TMSP: trailing bytes");
  return model;
}

void SpecialistModel::save(const std::filesystem::path& path) const {
  io::write_file_atomic(path, serialize());
}

SpecialistModel SpecialistModel::load(const std::filesystem::path& path) {
  return deserialize(io::read_file(path));
}

std::uint64_t SpecialistModel::digest() const {
  const auto bytes = serialize();
  return img::fnv1a64(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace tmc::tm
