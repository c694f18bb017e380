#include "fixtures.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace fixture {

TempDir::TempDir() {
  std::random_device rd;
  const auto base = std::filesystem::temp_directory_path();
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto candidate = base / ("tmc-test-" + std::to_string(rd()));
    if (std::filesystem::create_directory(candidate)) {
      path_ = candidate;
      return;
    }
  }
  throw std::runtime_error("TempDir: could not create a scratch directory");
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

tmc::data::LabeledDataset band_dataset(int count, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<int> noise(0, 90);
  std::uniform_int_distribution<int> offset(4, 24);
  tmc::data::LabeledDataset ds;
  for (int i = 0; i < count; ++i) {
    const int label = i % 2;
    const int at = offset(gen);
    tmc::img::RgbImage img(32, 32);
    for (int r = 0; r < 32; ++r) {
      for (int c = 0; c < 32; ++c) {
        const int pos = label == 0 ? r : c;
        const bool band = pos >= at && pos < at + 4;
        for (int ch = 0; ch < 3; ++ch) {
          img.at(r, c, ch) = static_cast<std::uint8_t>(band ? 255 - noise(gen) : noise(gen));
        }
      }
    }
    ds.add(std::move(img), label);
  }
  return ds;
}

StripeSet stripe_set(int count, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<int> pos(0, 3);
  StripeSet out;
  for (int i = 0; i < count; ++i) {
    const int label = static_cast<int>(gen() % 2);
    const int at = pos(gen);
    tmc::img::BitPlaneStack s(4, 4, 1);
    for (int k = 0; k < 4; ++k) {
      if (label == 0) {
        s.set(k, at, 0, true);
      } else {
        s.set(at, k, 0, true);
      }
    }
    // One background bit of noise, away from the stripe.
    int r = pos(gen), c = pos(gen);
    if ((label == 0 && c != at) || (label == 1 && r != at)) s.set(r, c, 0, true);
    out.stacks.push_back(std::move(s));
    out.labels.push_back(label);
  }
  return out;
}

tmc::tm::SpecialistModel random_model(int height, int width, int planes, int window, int classes,
                                      int clauses, std::mt19937_64& gen, double empty_share) {
  tmc::tm::TMConfig cfg;
  cfg.clauses = clauses;
  cfg.threshold = 10;
  cfg.specificity = 3.0;
  cfg.window = window;
  cfg.states_per_action = 8;
  tmc::tm::SpecialistModel m(cfg, classes, {height, width, planes}, tmc::img::Booleanizer{});
  std::uniform_int_distribution<int> state(1, 2 * cfg.states_per_action);
  std::uniform_int_distribution<int> excluded(cfg.states_per_action + 1, 2 * cfg.states_per_action);
  std::uniform_int_distribution<int> weight(0, 5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // Sparse clauses are the interesting ones; dense ones almost never fire.
  std::uniform_real_distribution<double> density(0.05, 0.5);
  for (int i = 0; i < classes; ++i) {
    auto& bank = m.bank(i);
    for (int j = 0; j < bank.size(); ++j) {
      const bool empty = u(gen) < empty_share;
      const double d = density(gen);
      for (int k = 0; k < bank.literals(); ++k) {
        const bool include = !empty && u(gen) < d;
        bank.set_state(j, k, include ? state(gen) % cfg.states_per_action + 1 : excluded(gen));
      }
      bank.set_weight(j, static_cast<std::uint32_t>(weight(gen)));
      bank.refresh(j);
    }
  }
  return m;
}

tmc::img::BitPlaneStack stack_from_code(int height, int width, int planes, std::uint64_t code) {
  tmc::img::BitPlaneStack s(height, width, planes);
  auto bits = s.bits();
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = (code >> i) & 1U;
  return s;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream f(path, std::ios::binary);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write_file: " + path.string());
}

}  // namespace fixture
