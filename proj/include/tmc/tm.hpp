#pragma once

// Convolutional, optionally weighted Tsetlin Machine.
//
// Each class owns a bank of n clauses, the first n/2 voting for the class and
// the rest against it. A clause is a conjunction over the literal vector
// [x, not x] of one patch; convolutionally it fires when any patch satisfies
// it. Each literal is governed by a Tsetlin automaton with 2N states: states
// 1..N include the literal, N+1..2N exclude it.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tmc/booleanizer.hpp"
#include "tmc/imgproc.hpp"
#include "tmc/rng.hpp"

namespace tmc::tm {

// ---------------------------------------------------------------------------
// Tsetlin automaton

enum class Action { Include, Exclude };
enum class Signal { Reward, Penalty, Inaction };

class TsetlinAutomaton {
 public:
  TsetlinAutomaton(int states_per_action, int state);

  int state() const { return state_; }
  int states_per_action() const { return n_; }
  Action action() const { return state_ <= n_ ? Action::Include : Action::Exclude; }

  /// Reward deepens the current action (saturating at 1 or 2N); penalty
  /// moves towards the centre and crosses it between N and N+1.
  void transition(Signal signal);

 private:
  int n_;
  int state_;
};

TsetlinAutomaton ta_transition(TsetlinAutomaton a, Signal signal);

// ---------------------------------------------------------------------------
// Configuration and geometry

struct TMConfig {
  int clauses = 2000;  // per class, split evenly between polarities
  int threshold = 1000;
  double specificity = 5.0;
  int window = 5;
  bool weighted = true;
  int states_per_action = 128;
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

/// Patch layout of a convolution window over an H x W x B stack.
/// Features per patch: window^2 * B content bits, then the patch row
/// thermometer-coded over H - window + 1 positions (H - window bits,
/// bit j set iff row > j), then the column likewise.
struct PatchGeometry {
  int height = 0;
  int width = 0;
  int planes = 0;
  int window = 0;

  static PatchGeometry make(int height, int width, int planes, int window);

  int positions_y() const { return height - window + 1; }
  int positions_x() const { return width - window + 1; }
  int patch_count() const { return positions_y() * positions_x(); }
  int content_bits() const { return window * window * planes; }
  int position_bits() const { return (height - window) + (width - window); }
  int features() const { return content_bits() + position_bits(); }
  int literals() const { return 2 * features(); }

  bool operator==(const PatchGeometry&) const = default;
};

/// Features of every patch of one input, stored feature-major: for each
/// feature one bitset over patches (bit p set iff the feature is 1 in patch p).
/// A clause is then evaluated 64 patches at a time.
class PatchSet {
 public:
  PatchSet() = default;
  explicit PatchSet(const PatchGeometry& g)
      : geometry_(g),
        patch_words_((g.patch_count() + 63) / 64),
        rows_(static_cast<std::size_t>(g.features()) * patch_words_, 0) {}

  const PatchGeometry& geometry() const { return geometry_; }
  int patch_count() const { return geometry_.patch_count(); }
  int patch_words() const { return patch_words_; }

  /// Bitset over patches of feature k.
  const std::uint64_t* row(int k) const { return rows_.data() + static_cast<std::size_t>(k) * patch_words_; }
  /// Valid patch bits of word w.
  std::uint64_t word_mask(int w) const {
    const int rem = patch_count() - 64 * w;
    return rem >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << rem) - 1;
  }

  bool feature(int p, int k) const { return (row(k)[p >> 6] >> (p & 63)) & 1U; }
  /// Literal k of patch p: x_k for k < o, not x_(k-o) otherwise.
  bool literal(int p, int k) const {
    const int o = geometry_.features();
    return k < o ? feature(p, k) : !feature(p, k - o);
  }
  void set_feature(int p, int k) {
    rows_[static_cast<std::size_t>(k) * patch_words_ + (p >> 6)] |= std::uint64_t{1} << (p & 63);
  }

  /// Writes the features of patch p as 0/1 bytes (features() of them).
  void fill_features(int p, std::uint8_t* out) const;

 private:
  friend PatchSet extract_patches(const img::BitPlaneStack& stack, int window);

  PatchGeometry geometry_;
  int patch_words_ = 0;
  std::vector<std::uint64_t> rows_;
  std::vector<std::uint8_t> source_;  // stack bits, when built by extract_patches
};

/// [x, not x].
std::vector<std::uint8_t> build_literals(std::span<const std::uint8_t> x);

/// Throws std::invalid_argument when the window exceeds the stack.
PatchSet extract_patches(const img::BitPlaneStack& stack, int window);

// ---------------------------------------------------------------------------
// Clauses

enum class Polarity : std::uint8_t { Positive = 0, Negative = 1 };
enum class EvalMode { Classify, Train };

/// All clauses of one class. Each clause keeps one automaton state per
/// literal and, derived from those, the list of its included literals.
/// After changing states call refresh(j) before evaluating clause j.
class ClauseBank {
 public:
  ClauseBank() = default;
  ClauseBank(int clauses, int features, int states_per_action);

  int size() const { return clauses_; }
  int features() const { return features_; }
  int literals() const { return 2 * features_; }
  int states_per_action() const { return n_; }

  Polarity polarity(int j) const { return j < clauses_ / 2 ? Polarity::Positive : Polarity::Negative; }
  int sign(int j) const { return polarity(j) == Polarity::Positive ? 1 : -1; }

  std::uint32_t weight(int j) const { return weights_[j]; }
  void set_weight(int j, std::uint32_t w) { weights_[j] = w; }

  int state(int j, int k) const { return states_[index(j, k)]; }
  void set_state(int j, int k, int state);
  bool included(int j, int k) const { return states_[index(j, k)] <= n_; }
  bool empty(int j) const { return included_list_[j].empty(); }
  int included_count(int j) const { return static_cast<int>(included_list_[j].size()); }

  /// Include-pressure moves towards state 1, exclude-pressure towards 2N.
  void push_include(int j, int k) {
    auto& s = states_[index(j, k)];
    if (s > 1) --s;
  }
  void push_exclude(int j, int k) {
    auto& s = states_[index(j, k)];
    if (s < 2 * n_) ++s;
  }

  /// The literals() states of clause j, for bulk updates.
  std::uint16_t* states(int j) { return &states_[index(j, 0)]; }

  /// Rebuilds the included-literal list of clause j from its states.
  void refresh(int j);

  /// Whether patch p satisfies every included literal of clause j.
  bool satisfied_by(int j, const PatchSet& x, int p) const;

  /// Bitset word w of the patches satisfying clause j.
  std::uint64_t satisfied_word(int j, const PatchSet& x, int w) const;

  /// Convolutional output: OR over patches. An empty clause outputs 1 while
  /// training and 0 when classifying.
  bool evaluate(int j, const PatchSet& x, EvalMode mode) const;

  /// Indices of the patches satisfying clause j (all patches if empty).
  void satisfying_patches(int j, const PatchSet& x, std::vector<int>& out) const;

  bool operator==(const ClauseBank&) const = default;

 private:
  std::size_t index(int j, int k) const { return static_cast<std::size_t>(j) * 2 * features_ + k; }

  int clauses_ = 0;
  int features_ = 0;
  int n_ = 0;
  std::vector<std::uint16_t> states_;
  std::vector<std::uint32_t> weights_;
  std::vector<std::vector<std::uint32_t>> included_list_;
  std::vector<std::uint32_t> scratch_;
};

// ---------------------------------------------------------------------------
// Specialist model

class SpecialistModel {
 public:
  SpecialistModel() = default;
  /// `input` is the {height, width, planes} of the Booleanized stacks.
  SpecialistModel(const TMConfig& config, int classes, std::array<int, 3> input,
                  img::Booleanizer binding);

  const TMConfig& config() const { return config_; }
  int classes() const { return static_cast<int>(banks_.size()); }
  const PatchGeometry& geometry() const { return geometry_; }
  const img::Booleanizer& binding() const { return binding_; }

  ClauseBank& bank(int cls) { return banks_[cls]; }
  const ClauseBank& bank(int cls) const { return banks_[cls]; }

  PatchSet patches(const img::BitPlaneStack& stack) const;

  /// Weighted positive votes minus weighted negative votes of class cls.
  int class_sum(const PatchSet& x, int cls, EvalMode mode = EvalMode::Classify) const;
  std::vector<int> class_sums(const PatchSet& x) const;
  /// Argmax of the class sums, ties to the lowest class.
  int classify(const PatchSet& x) const;

  /// One feedback step on a single example; see train_epoch.
  void train_example(const PatchSet& x, int label, Rng& rng);

  std::vector<std::uint8_t> serialize() const;
  static SpecialistModel deserialize(std::span<const std::uint8_t> bytes);
  void save(const std::filesystem::path& path) const;
  static SpecialistModel load(const std::filesystem::path& path);
  /// FNV-1a 64 over the serialized form.
  std::uint64_t digest() const;

 private:
  void update_class(const PatchSet& x, int cls, bool target, Rng& rng);
  void type_i(int cls, int j, bool fired, const PatchSet& x, Rng& rng);
  void type_ii(int cls, int j, const PatchSet& x, Rng& rng);

  TMConfig config_;
  PatchGeometry geometry_;
  img::Booleanizer binding_;
  std::vector<ClauseBank> banks_;
  // Scratch buffers reused across training steps.
  std::vector<std::uint8_t> fired_;
  std::vector<int> candidates_;
  std::vector<std::uint8_t> features_;
  std::vector<std::uint8_t> hits_;
  std::vector<std::uint64_t> words_;
};

/// Free-function forms of the model API.
bool clause_eval(const ClauseBank& bank, int j, const PatchSet& x, EvalMode mode = EvalMode::Classify);
int class_sum(const SpecialistModel& model, const img::BitPlaneStack& stack, int cls);
int classify(const SpecialistModel& model, const img::BitPlaneStack& stack);

/// One pass over the examples in an order shuffled by `rng`.
///
/// Per example, random draws are consumed in this order:
///   1. the negative class, uniform over the other classes (skipped when m = 1);
///   2. the target class, then the negative class, each as follows: one
///      uniform draw per clause in index order deciding whether the clause
///      gets feedback, with probability (T - c)/(2T) for the target and
///      (T + c)/(2T) for the negative class, c the clamped training-mode sum;
///      within a selected clause, one draw for the satisfying patch (if the
///      clause fires), then for Type I one Rng::fill call giving a 64-bit word per four
///      literals, each 16-bit quarter marking its literal hit with probability
///      floor(65536 / s) / 65536, i.e. 1/s to within 2^-16.
///
/// Type I (positive clauses of the target, negative clauses of the other
/// class): on a firing clause, literals equal to 1 in the chosen patch move
/// towards include unless hit, literals equal to 0 move towards exclude if
/// hit, and the weight grows by one; on a silent clause every hit automaton
/// moves towards exclude. Type II (the remaining clauses): on a firing clause
/// every excluded literal that is 0 in the chosen patch moves towards
/// include, and the weight shrinks by one (floor 0).
///
/// Throws std::invalid_argument on an empty set or an out-of-range label.
void train_epoch(SpecialistModel& model, std::span<const PatchSet> inputs,
                 std::span<const int> labels, Rng& rng);

/// Fraction of inputs classified as their label.
double accuracy(const SpecialistModel& model, std::span<const PatchSet> inputs,
                std::span<const int> labels, int jobs = 1);

std::vector<int> predict(const SpecialistModel& model, std::span<const PatchSet> inputs, int jobs = 1);

}  // namespace tmc::tm
