#include <algorithm>
#include <bit>
#include <cassert>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "tmc/parallel.hpp"
#include "tmc/tm.hpp"

namespace tmc::tm {

namespace {

// Marks each of `length` positions hit with probability floor(2^16 / s) / 2^16.
// Each random word decides four positions, one per 16-bit quarter, low first.
void sample_hits(int length, double s, Rng& rng, std::vector<std::uint64_t>& words,
                 std::vector<std::uint8_t>& hits) {
  hits.resize(length);
  if (s <= 1.0) {
    std::fill(hits.begin(), hits.end(), 1);
    return;
  }
  const auto limit = static_cast<std::uint32_t>(std::ldexp(1.0 / s, 16));
  words.resize((length + 3) / 4);
  rng.fill(words);
  std::uint8_t* out = hits.data();
  if constexpr (std::endian::native == std::endian::little) {
    // The quarters of a word sit in memory low first already.
    const auto* q = reinterpret_cast<const std::uint16_t*>(words.data());
    for (int i = 0; i < length; ++i) out[i] = q[i] < limit;
  } else {
    const std::uint64_t* u = words.data();
    for (int i = 0; i < length; ++i) out[i] = ((u[i >> 2] >> ((i & 3) * 16)) & 0xffffU) < limit;
  }
}

}  // namespace

void TMConfig::validate() const {
  if (clauses < 2 || clauses % 2 != 0) throw std::invalid_argument("clauses must be even and >= 2");
  if (threshold < 1) throw std::invalid_argument("T must be >= 1");
  if (!(specificity >= 1.0)) throw std::invalid_argument("s must be >= 1");
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  if (states_per_action < 1 || states_per_action > 32767) {
    throw std::invalid_argument("states per action must be in [1, 32767]");
  }
}

SpecialistModel::SpecialistModel(const TMConfig& config, int classes, std::array<int, 3> input,
                                 img::Booleanizer binding)
    : config_(config), binding_(std::move(binding)) {
  config_.validate();
  if (classes < 1) throw std::invalid_argument("SpecialistModel: need at least one class");
  geometry_ = PatchGeometry::make(input[0], input[1], input[2], config_.window);
  banks_.reserve(classes);
  for (int c = 0; c < classes; ++c) {
    banks_.emplace_back(config_.clauses, geometry_.features(), config_.states_per_action);
  }
}

PatchSet SpecialistModel::patches(const img::BitPlaneStack& stack) const {
  if (stack.height() != geometry_.height || stack.width() != geometry_.width ||
      stack.planes() != geometry_.planes) {
    throw std::invalid_argument("input geometry " + std::to_string(stack.height()) + "x" +
                                std::to_string(stack.width()) + "x" + std::to_string(stack.planes()) +
                                " does not match the model");
  }
  return extract_patches(stack, geometry_.window);
}

int SpecialistModel::class_sum(const PatchSet& x, int cls, EvalMode mode) const {
  if (!(x.geometry() == geometry_)) throw std::invalid_argument("class_sum: geometry mismatch");
  const ClauseBank& bank = banks_.at(cls);
  int sum = 0;
  for (int j = 0; j < bank.size(); ++j) {
    if (bank.evaluate(j, x, mode)) sum += bank.sign(j) * static_cast<int>(bank.weight(j));
  }
  return sum;
}

std::vector<int> SpecialistModel::class_sums(const PatchSet& x) const {
  std::vector<int> sums(banks_.size());
  for (int c = 0; c < classes(); ++c) sums[c] = class_sum(x, c);
  return sums;
}

int SpecialistModel::classify(const PatchSet& x) const {
  const auto sums = class_sums(x);
  return static_cast<int>(std::max_element(sums.begin(), sums.end()) - sums.begin());
}

void SpecialistModel::train_example(const PatchSet& x, int label, Rng& rng) {
  if (label < 0 || label >= classes()) throw std::invalid_argument("train: label out of range");
  if (!(x.geometry() == geometry_)) throw std::invalid_argument("train: geometry mismatch");
  int negative = -1;
  if (classes() > 1) {
    negative = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes() - 1)));
    if (negative >= label) ++negative;
  }
  update_class(x, label, true, rng);
  if (negative >= 0) update_class(x, negative, false, rng);
}

void SpecialistModel::update_class(const PatchSet& x, int cls, bool target, Rng& rng) {
  ClauseBank& bank = banks_[cls];
  const int n = bank.size();
  fired_.assign(n, 0);
  int sum = 0;
  for (int j = 0; j < n; ++j) {
    fired_[j] = bank.evaluate(j, x, EvalMode::Train) ? 1 : 0;
    if (fired_[j]) sum += bank.sign(j) * static_cast<int>(bank.weight(j));
  }
  const int t = config_.threshold;
  const int c = std::clamp(sum, -t, t);
  const double p = target ? (t - c) / (2.0 * t) : (t + c) / (2.0 * t);
  assert(p >= 0.0 && p <= 1.0);

  for (int j = 0; j < n; ++j) {
    if (rng.uniform() >= p) continue;
    const bool positive = bank.polarity(j) == Polarity::Positive;
    if (positive == target) {
      type_i(cls, j, fired_[j] != 0, x, rng);
    } else if (fired_[j]) {
      type_ii(cls, j, x, rng);
    }
  }
}

void SpecialistModel::type_i(int cls, int j, bool fired, const PatchSet& x, Rng& rng) {
  ClauseBank& bank = banks_[cls];
  const int o = bank.features();
  const int n = bank.states_per_action();
  const int top = 2 * n;
  std::uint16_t* st = bank.states(j);
  // Counts literals whose state crossed the include boundary.
  int crossed = 0;
  if (fired) {
    bank.satisfying_patches(j, x, candidates_);
    const int p = candidates_[rng.below(candidates_.size())];
    features_.resize(o);
    x.fill_features(p, features_.data());
    sample_hits(2 * o, config_.specificity, rng, words_, hits_);
    // A literal that is 1 moves towards include unless hit; one that is 0
    // moves towards exclude when hit.
    for (int k = 0; k < o; ++k) {
      const int one = features_[k];
      const int hit = hits_[k];
      const int s = st[k];
      const int t = s - ((one & (hit ^ 1)) & (s > 1)) + (((one ^ 1) & hit) & (s < top));
      crossed += (s <= n) != (t <= n);
      st[k] = static_cast<std::uint16_t>(t);
    }
    for (int k = 0; k < o; ++k) {
      const int one = features_[k] ^ 1;
      const int hit = hits_[o + k];
      const int s = st[o + k];
      const int t = s - ((one & (hit ^ 1)) & (s > 1)) + (((one ^ 1) & hit) & (s < top));
      crossed += (s <= n) != (t <= n);
      st[o + k] = static_cast<std::uint16_t>(t);
    }
    if (config_.weighted) bank.set_weight(j, bank.weight(j) + 1);
  } else {
    sample_hits(2 * o, config_.specificity, rng, words_, hits_);
    for (int k = 0; k < 2 * o; ++k) {
      const int s = st[k];
      const int t = s + (hits_[k] & (s < top));
      crossed += (s == n) & (t != s);
      st[k] = static_cast<std::uint16_t>(t);
    }
  }
  if (crossed != 0) bank.refresh(j);
}

void SpecialistModel::type_ii(int cls, int j, const PatchSet& x, Rng& rng) {
  ClauseBank& bank = banks_[cls];
  const int o = bank.features();
  const int n = bank.states_per_action();
  std::uint16_t* st = bank.states(j);
  bank.satisfying_patches(j, x, candidates_);
  const int p = candidates_[rng.below(candidates_.size())];
  features_.resize(o);
  x.fill_features(p, features_.data());
  // Excluded literals that are 0 in the patch move towards include.
  int crossed = 0;
  for (int k = 0; k < o; ++k) {
    const int step = (features_[k] ^ 1) & (st[k] > n);
    crossed += step & (st[k] == n + 1);
    st[k] = static_cast<std::uint16_t>(st[k] - step);
  }
  for (int k = 0; k < o; ++k) {
    const int step = features_[k] & (st[o + k] > n);
    crossed += step & (st[o + k] == n + 1);
    st[o + k] = static_cast<std::uint16_t>(st[o + k] - step);
  }
  if (config_.weighted && bank.weight(j) > 0) bank.set_weight(j, bank.weight(j) - 1);
  if (crossed != 0) bank.refresh(j);
}

int class_sum(const SpecialistModel& model, const img::BitPlaneStack& stack, int cls) {
  return model.class_sum(model.patches(stack), cls);
}

int classify(const SpecialistModel& model, const img::BitPlaneStack& stack) {
  return model.classify(model.patches(stack));
}

void train_epoch(SpecialistModel& model, std::span<const PatchSet> inputs, std::span<const int> labels,
                 Rng& rng) {
  if (inputs.empty()) throw std::invalid_argument("train_epoch: empty dataset");
  if (inputs.size() != labels.size()) throw std::invalid_argument("train_epoch: label count mismatch");
  for (int y : labels) {
    if (y < 0 || y >= model.classes()) throw std::invalid_argument("train_epoch: label out of range");
  }
  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order.begin(), order.end());
  for (std::size_t i : order) model.train_example(inputs[i], labels[i], rng);
}

std::vector<int> predict(const SpecialistModel& model, std::span<const PatchSet> inputs, int jobs) {
  std::vector<int> out(inputs.size());
  parallel_for(inputs.size(), jobs, [&](std::size_t i) { out[i] = model.classify(inputs[i]); });
  return out;
}

double accuracy(const SpecialistModel& model, std::span<const PatchSet> inputs, std::span<const int> labels,
                int jobs) {
  if (inputs.empty()) return 0.0;
  const auto pred = predict(model, inputs, jobs);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

}  // namespace tmc::tm
