// Acceptance run: one PASS/FAIL/SKIP line per criterion.
//
//   tmc_acceptance [criterion ...]   (default: all of 1..11)
//
// Criteria 6, 7, 8 and 11 read CIFAR-10 binary batches from TMC_CIFAR10_DIR
// (data_batch_1.bin .. data_batch_5.bin, test_batch.bin) and are skipped when
// it is unset. Exit status: 0 all run criteria passed, 1 any failed, 77 every
// requested criterion was skipped.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "tmc/booleanizer.hpp"
#include "tmc/composite.hpp"
#include "tmc/data.hpp"
#include "tmc/hpo.hpp"
#include "tmc/parallel.hpp"
#include "tmc/tm.hpp"

using namespace tmc;

namespace {

// Pinned tolerances and budgets.
constexpr double kBooleanizerSeconds = 60.0;
constexpr double kEndToEndAccuracy = 0.70;
constexpr double kCompositeSlack = 0.005;
constexpr double kClauseScalingSlack = 0.010;
constexpr double kSearchSeconds = 300.0;

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status = Status::Pass;
  std::string detail;
};

Outcome pass(std::string d) { return {Status::Pass, std::move(d)}; }
Outcome fail(std::string d) { return {Status::Fail, std::move(d)}; }
Outcome skip(std::string d) { return {Status::Skip, std::move(d)}; }

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Counts mismatches; keeps the first description for the report.
struct Tally {
  long checks = 0;
  long failures = 0;
  std::string first;
  void check(bool ok, const std::string& what) {
    ++checks;
    if (!ok && failures++ == 0) first = what;
  }
  Outcome outcome(const std::string& what) const {
    if (failures == 0) return pass(std::to_string(checks) + " " + what);
    return fail(std::to_string(failures) + "/" + std::to_string(checks) + " mismatches, first: " + first);
  }
};

// ---------------------------------------------------------------------------
// 1. Booleanizers against their oracles

Outcome booleanizer_oracles() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 gen(101);
  Tally tally;
  const img::HogParams hp;
  for (int side : {8, 32}) {
    const int count = side == 8 ? 100 : 20;
    for (int i = 0; i < count; ++i) {
      const auto im = oracle::random_image(side, side, gen);
      const auto at = "side " + std::to_string(side) + " image " + std::to_string(i);
      tally.check(img::canny(im) == oracle::canny(im, 1.4, 2, 100.0, 200.0), "canny " + at);
      tally.check(img::hog_booleanize(img::hog_features(im)) == oracle::hog(im, hp.cell, hp.block, hp.bins, hp.epsilon),
                  "hog " + at);
      tally.check(img::adaptive_gaussian(im) == oracle::adaptive_gaussian(im, 11, 2.0), "adaptive_gaussian " + at);
      tally.check(img::adaptive_mean(im) == oracle::adaptive_mean(im, 11, 2.0), "adaptive_mean " + at);
      tally.check(img::otsu(im) == oracle::otsu(im), "otsu " + at);
      tally.check(img::thermometer_encode(im, 8) == oracle::thermometer(im, 8), "thermometer " + at);
      tally.check(img::adaptive_thermometer_encode(im, 8, 1.0) == oracle::adaptive_thermometer(im, 8, 1.0),
                  "adaptive_thermometer " + at);
    }
  }
  const double secs = seconds_since(t0);
  if (tally.failures != 0) return tally.outcome("");
  if (secs >= kBooleanizerSeconds) return fail(fmt("all bit-exact but took %.1f s", secs));
  return pass(std::to_string(tally.checks) + fmt(" bit-exact comparisons in %.1f s", secs));
}

// ---------------------------------------------------------------------------
// 2. Otsu optimality

Outcome otsu_optimality() {
  std::mt19937_64 gen(202);
  Tally tally;
  for (int i = 0; i < 200; ++i) {
    const auto h = oracle::random_histogram(gen);
    tally.check(img::otsu_threshold(h) == oracle::otsu_threshold(h), "histogram " + std::to_string(i));
  }
  return tally.outcome("histograms at the exhaustive maximum, smallest maximiser");
}

// ---------------------------------------------------------------------------
// 3. Thermometer rows and code shape

Outcome thermometer_rows() {
  Tally tally;
  const auto th8 = img::thermometer_thresholds(8);
  tally.check(img::thermometer_code(255, th8) == std::vector<std::uint8_t>(8, 0), "255 at t=8");
  tally.check(img::thermometer_code(15, th8) == std::vector<std::uint8_t>{0, 1, 1, 1, 1, 1, 1, 1}, "15 at t=8");
  for (int t : {4, 8, 16}) {
    const auto th = img::thermometer_thresholds(t);
    int previous_ones = t;
    for (int v = 0; v < 256; ++v) {
      const auto code = img::thermometer_code(static_cast<std::uint8_t>(v), th);
      int ones = 0;
      for (auto b : code) ones += b;
      // Contiguous: a block of zeros followed by a block of ones.
      bool contiguous = true;
      for (int i = 0; i < t; ++i) contiguous &= code[i] == (i >= t - ones ? 1 : 0);
      tally.check(contiguous, "value " + std::to_string(v) + " t=" + std::to_string(t) + " not contiguous");
      tally.check(ones <= previous_ones, "value " + std::to_string(v) + " t=" + std::to_string(t) + " not monotone");
      previous_ones = ones;
    }
  }
  return tally.outcome("checks on golden rows, contiguity and monotonicity");
}

// ---------------------------------------------------------------------------
// 4. Clause and classification oracle, exhaustive over inputs

Outcome clause_oracle() {
  std::mt19937_64 gen(404);
  Tally tally;
  // {H, W, planes, window}: literal counts 2 * features stay at or below 12,
  // patch counts at or below 16.
  const int shapes[][4] = {{2, 2, 1, 1}, {1, 1, 6, 1}, {3, 3, 1, 2}, {3, 4, 1, 1}, {2, 5, 1, 1}, {2, 3, 1, 2}, {2, 4, 1, 2}};
  for (const auto& sh : shapes) {
    for (int classes = 1; classes <= 3; ++classes) {
      for (int trial = 0; trial < 4; ++trial) {
        const auto m = fixture::random_model(sh[0], sh[1], sh[2], sh[3], classes, 8, gen);
        const auto& g = m.geometry();
        const bool small = g.literals() <= 12 && g.patch_count() <= 16;
        tally.check(small, "shape exceeds the literal or patch limit");
        const int cells = sh[0] * sh[1] * sh[2];
        for (std::uint64_t code = 0; code < (1ULL << cells); ++code) {
          const auto stack = fixture::stack_from_code(sh[0], sh[1], sh[2], code);
          const auto x = m.patches(stack);
          const auto lits = oracle::patch_literals(stack, sh[3]);
          for (int c = 0; c < classes; ++c) {
            for (int j = 0; j < m.bank(c).size(); ++j) {
              tally.check(tm::clause_eval(m.bank(c), j, x) == oracle::clause_output(m.bank(c), j, lits),
                          "clause " + std::to_string(j) + " input " + std::to_string(code));
            }
            tally.check(m.class_sum(x, c) == oracle::class_sum(m, c, lits), "class sum, input " + std::to_string(code));
          }
          tally.check(m.classify(x) == oracle::classify(m, lits), "classify, input " + std::to_string(code));
        }
      }
    }
  }
  return tally.outcome("exhaustive clause, class-sum and argmax agreements");
}

// ---------------------------------------------------------------------------
// 5. Composite invariants

composite::ClassSumMatrix random_sums(int id, int inputs, int classes, int range, std::mt19937_64& gen) {
  std::uniform_int_distribution<int> d(-range, range);
  std::vector<std::int32_t> v(static_cast<std::size_t>(inputs) * classes);
  for (auto& x : v) x = d(gen);
  return composite::ClassSumMatrix(id, inputs, classes, std::move(v));
}

Outcome composite_invariants() {
  std::mt19937_64 gen(505);
  Tally tally;
  for (int trial = 0; trial < 1000; ++trial) {
    const int r = 2 + trial % 5;
    const int inputs = 1 + static_cast<int>(gen() % 16);
    const int classes = 2 + static_cast<int>(gen() % 9);
    const int range = trial % 3 == 0 ? 3 : 50000;
    std::vector<composite::ClassSumMatrix> mats;
    for (int t = 0; t < r; ++t) mats.push_back(random_sums(t, inputs, classes, range, gen));
    const auto base = composite::composite_predict(mats);
    const auto at = "instance " + std::to_string(trial);
    tally.check(base == oracle::fuse(mats), at + " oracle");

    // r = 1 reproduces the member's own argmax.
    std::vector<int> own;
    for (int f = 0; f < inputs; ++f) {
      int best = 0;
      for (int i = 1; i < classes; ++i)
        if (mats[0].at(f, i) > mats[0].at(f, best)) best = i;
      own.push_back(best);
    }
    tally.check(composite::composite_predict(std::span(mats).first(1)) == own, at + " r=1");

    // Positive scaling of one member, integer and fractional.
    for (const auto& [num, den] : {std::pair{7, 1}, std::pair{3, 2}}) {
      auto scaled = mats;
      const int t = static_cast<int>(gen() % r);
      for (auto& v : scaled[t].sums) v *= num;
      // λ = num / den applied as num to the member and den to the others.
      for (int u = 0; u < r; ++u)
        if (u != t)
          for (auto& v : scaled[u].sums) v *= den;
      tally.check(composite::composite_predict(scaled) == base, at + " scaling");
    }

    auto shuffled = mats;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    tally.check(composite::composite_predict(shuffled) == base, at + " permutation");

    auto more = mats;
    const int k = static_cast<int>(gen() % 2001) - 1000;
    more.emplace_back(r, inputs, classes, std::vector<std::int32_t>(mats[0].sums.size(), k));
    tally.check(composite::composite_predict(more) == base, at + " constant member");
  }
  return tally.outcome("invariant checks over 1000 random instances");
}

// ---------------------------------------------------------------------------
// 9. Augmentation contract

Outcome augmentation() {
  Tally tally;
  for (int n : {0, 1, 7, 50}) {
    const auto ds = fixture::band_dataset(n, 900 + n);
    const auto aug = data::augment(ds);
    tally.check(aug.size() == 2 * ds.size(), "n=" + std::to_string(n) + " size");
    std::mt19937_64 gen(n);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      tally.check(aug.labels[2 * i] == ds.labels[i] && aug.labels[2 * i + 1] == ds.labels[i], "label");
      tally.check(aug.images[2 * i] == ds.images[i], "original kept");
      const auto& im = ds.images[i];
      for (int s = 0; s < 4; ++s) {
        const int r = static_cast<int>(gen() % im.height());
        bool mirrored = true;
        for (int c = 0; c < im.width(); ++c)
          for (int ch = 0; ch < 3; ++ch) mirrored &= aug.images[2 * i + 1].at(r, c, ch) == im.at(r, im.width() - 1 - c, ch);
        tally.check(mirrored, "row " + std::to_string(r) + " of item " + std::to_string(i) + " not mirrored");
      }
    }
  }
  // The 50 000 -> 100 000 ratio on a full-size count, pixels left blank.
  data::LabeledDataset big;
  for (int i = 0; i < 50000; ++i) big.add(img::RgbImage(1, 1), i % 10);
  tally.check(data::augment(big).size() == 100000, "50000 -> 100000");
  return tally.outcome("size, label and mirrored-row checks");
}

// ---------------------------------------------------------------------------
// 10. Search harness

Outcome search_harness() {
  const auto ds = fixture::band_dataset(500, 1010);
  const auto binding = img::Booleanizer::defaults(img::Technique::Thermometer);
  const auto set = data::booleanize_dataset(ds, binding, std::nullopt, default_jobs()).set;
  const hpo::SearchSpace space;
  fixture::TempDir dir;
  const auto log_path = dir / "trials.jsonl";

  auto run = [&](std::ofstream* log) {
    hpo::SearchOptions opt;
    opt.trials = 10;
    opt.epochs = 2;
    opt.seed = 3;
    opt.jobs = default_jobs();
    if (log) opt.on_trial = [log](const hpo::Trial& t) { *log << hpo::trial_record(t) << '\n'; };
    return hpo::run_search(space, set.stacks, ds.labels, 2, binding, opt);
  };

  std::ofstream log(log_path);
  const auto t0 = std::chrono::steady_clock::now();
  const auto first = run(&log);
  const double secs = seconds_since(t0);
  log.close();

  int lines = 0;
  std::ifstream in(log_path);
  for (std::string line; std::getline(in, line);) lines += !line.empty();

  const auto second = run(nullptr);
  bool same = first.best.index == second.best.index;
  for (std::size_t i = 0; i < first.trials.size(); ++i) {
    same &= first.trials[i].accuracy == second.trials[i].accuracy;
    same &= hpo::format_config(first.trials[i].config) == hpo::format_config(second.trials[i].config);
  }
  const bool bounded = hpo::within_bounds(space, first.best.config, 32);

  const std::string detail = fmt("%.1f s, ", secs) + std::to_string(lines) + " log lines, best trial " +
                             std::to_string(first.best.index) + fmt(" accuracy %.3f", first.best.accuracy) +
                             (bounded ? ", in bounds" : ", OUT OF BOUNDS") +
                             (same ? ", reproduced" : ", NOT reproduced");
  if (secs < kSearchSeconds && lines == 10 && bounded && same) return pass(detail);
  return fail(detail);
}

// ---------------------------------------------------------------------------
// CIFAR-10 criteria

struct Cifar {
  data::LabeledDataset train;
  data::LabeledDataset test;
};

std::optional<Cifar> load_cifar() {
  const char* dir = std::getenv("TMC_CIFAR10_DIR");
  if (dir == nullptr || *dir == '\0') return std::nullopt;
  std::vector<std::filesystem::path> train_files;
  for (int i = 1; i <= 5; ++i) train_files.push_back(std::filesystem::path(dir) / ("data_batch_" + std::to_string(i) + ".bin"));
  const std::vector<std::filesystem::path> test_files = {std::filesystem::path(dir) / "test_batch.bin"};
  for (const auto& p : train_files)
    if (!std::filesystem::exists(p)) return std::nullopt;
  if (!std::filesystem::exists(test_files[0])) return std::nullopt;
  // airplane vs automobile, 1000 + 1000 train and 200 + 200 test.
  const std::vector<int> classes = {0, 1};
  Cifar c;
  c.train = data::select_classes(data::read_cifar10_files(train_files), classes, 1000);
  c.test = data::select_classes(data::read_cifar10_files(test_files), classes, 200);
  return c;
}

struct RunResult {
  double accuracy = 0.0;
  std::uint64_t digest = 0;
};

tm::TMConfig cifar_config(int clauses, int window, std::uint64_t seed) {
  tm::TMConfig c;
  c.clauses = clauses;
  c.threshold = clauses * 5 / 2;  // T = 500 at 200 clauses, scaled with the clause count
  c.specificity = 5.0;
  c.window = window;
  c.weighted = true;
  c.seed = seed;
  return c;
}

/// Trains one specialist and returns it with its test class sums.
struct Trained {
  tm::SpecialistModel model;
  composite::ClassSumMatrix sums;
  double accuracy = 0.0;
};

Trained train_specialist(const Cifar& data, const img::Booleanizer& b, const tm::TMConfig& config, int epochs,
                         int id) {
  const int jobs = default_jobs();
  const auto train = data::booleanize_dataset(data.train, b, data::cache_dir_from_env(), jobs).set;
  const auto test = data::booleanize_dataset(data.test, b, data::cache_dir_from_env(), jobs).set;
  tm::SpecialistModel m(config, 2, {train.height, train.width, train.planes}, b);
  std::vector<tm::PatchSet> xs(train.stacks.size());
  parallel_for(xs.size(), jobs, [&](std::size_t i) { xs[i] = m.patches(train.stacks[i]); });
  Rng rng(config.seed);
  for (int e = 0; e < epochs; ++e) tm::train_epoch(m, xs, data.train.labels, rng);
  auto sums = composite::specialist_class_sums(m, test.stacks, id, jobs);
  const auto pred = composite::composite_predict(std::span(&sums, 1));
  int correct = 0;
  for (std::size_t f = 0; f < pred.size(); ++f) correct += pred[f] == data.test.labels[f];
  const double acc = static_cast<double>(correct) / static_cast<double>(pred.size());
  return {std::move(m), std::move(sums), acc};
}

std::vector<RunResult> end_to_end(const Cifar& data) {
  const auto t = train_specialist(data, img::Booleanizer::parse("thermometer:levels=8"), cifar_config(200, 5, 1), 20, 0);
  return {{t.accuracy, t.model.digest()}};
}

std::vector<RunResult> composite_members(const Cifar& data) {
  const std::vector<std::pair<std::string, int>> members = {
      {"thermometer:levels=8", 5}, {"adaptive_mean", 5}, {"adaptive_gaussian", 5}, {"otsu", 5}, {"hog", 1}};
  std::vector<RunResult> out;
  std::vector<composite::ClassSumMatrix> mats;
  for (std::size_t i = 0; i < members.size(); ++i) {
    const auto b = img::Booleanizer::parse(members[i].first);
    auto t = train_specialist(data, b, cifar_config(100, members[i].second, 10 + i), 10, static_cast<int>(i));
    out.push_back({t.accuracy, t.model.digest()});
    mats.push_back(std::move(t.sums));
  }
  const auto pred = composite::composite_predict(mats);
  int correct = 0;
  for (std::size_t f = 0; f < pred.size(); ++f) correct += pred[f] == data.test.labels[f];
  out.push_back({static_cast<double>(correct) / static_cast<double>(pred.size()), 0});
  return out;
}

std::vector<RunResult> clause_scaling(const Cifar& data) {
  const auto b = img::Booleanizer::parse("thermometer:levels=8");
  std::vector<RunResult> out;
  for (int clauses : {100, 400}) {
    const auto t = train_specialist(data, b, cifar_config(clauses, 5, 20), 10, 0);
    out.push_back({t.accuracy, t.model.digest()});
  }
  return out;
}

class CifarRuns {
 public:
  explicit CifarRuns(const std::optional<Cifar>& data) : data_(data) {}
  bool available() const { return data_.has_value(); }

  const std::vector<RunResult>& get(int criterion) {
    auto it = cache_.find(criterion);
    if (it == cache_.end()) it = cache_.emplace(criterion, run(criterion)).first;
    return it->second;
  }
  std::vector<RunResult> run(int criterion) const {
    if (criterion == 6) return end_to_end(*data_);
    if (criterion == 7) return composite_members(*data_);
    return clause_scaling(*data_);
  }

 private:
  const std::optional<Cifar>& data_;
  std::map<int, std::vector<RunResult>> cache_;
};

const char* kNoCifar = "TMC_CIFAR10_DIR not set or missing batch files";

Outcome criterion_6(CifarRuns& runs) {
  if (!runs.available()) return skip(kNoCifar);
  const auto t0 = std::chrono::steady_clock::now();
  const double acc = runs.get(6)[0].accuracy;
  const auto detail = fmt("test accuracy %.4f", acc) + fmt(" in %.0f s", seconds_since(t0));
  return acc >= kEndToEndAccuracy ? pass(detail) : fail(detail);
}

Outcome criterion_7(CifarRuns& runs) {
  if (!runs.available()) return skip(kNoCifar);
  const auto& r = runs.get(7);
  double best = 0.0;
  std::string detail = "members";
  for (std::size_t i = 0; i + 1 < r.size(); ++i) {
    best = std::max(best, r[i].accuracy);
    detail += fmt(" %.4f", r[i].accuracy);
  }
  detail += fmt(", composite %.4f", r.back().accuracy);
  return r.back().accuracy >= best - kCompositeSlack ? pass(detail) : fail(detail);
}

Outcome criterion_8(CifarRuns& runs) {
  if (!runs.available()) return skip(kNoCifar);
  const auto& r = runs.get(8);
  const auto detail = fmt("100 clauses %.4f", r[0].accuracy) + fmt(", 400 clauses %.4f", r[1].accuracy);
  return r[1].accuracy >= r[0].accuracy - kClauseScalingSlack ? pass(detail) : fail(detail);
}

Outcome criterion_11(CifarRuns& runs) {
  if (!runs.available()) return skip(kNoCifar);
  int compared = 0;
  for (int c : {6, 7, 8}) {
    const auto& a = runs.get(c);
    const auto b = runs.run(c);
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].accuracy != b[i].accuracy || a[i].digest != b[i].digest) {
        return fail("criterion " + std::to_string(c) + " run " + std::to_string(i) + " differs on repetition");
      }
      ++compared;
    }
  }
  return pass(std::to_string(compared) + " accuracies and model digests identical on repetition");
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) {
    char* end = nullptr;
    const long v = std::strtol(argv[i], &end, 10);
    if (*end != '\0' || v < 1 || v > 11) {
      std::fprintf(stderr, "usage: %s [criterion 1..11 ...]\n", argv[0]);
      return 2;
    }
    wanted.insert(static_cast<int>(v));
  }
  if (wanted.empty())
    for (int i = 1; i <= 11; ++i) wanted.insert(i);

  const bool needs_cifar = wanted.count(6) || wanted.count(7) || wanted.count(8) || wanted.count(11);
  const auto cifar = needs_cifar ? load_cifar() : std::nullopt;
  CifarRuns runs(cifar);

  const std::map<int, std::pair<const char*, std::function<Outcome()>>> criteria = {
      {1, {"booleanizer oracle equivalence", booleanizer_oracles}},
      {2, {"otsu optimality", otsu_optimality}},
      {3, {"thermometer golden rows", thermometer_rows}},
      {4, {"clause and classification oracle", clause_oracle}},
      {5, {"composite algebraic invariants", composite_invariants}},
      {6, {"desk-scale end-to-end", [&] { return criterion_6(runs); }}},
      {7, {"composite versus best member", [&] { return criterion_7(runs); }}},
      {8, {"clause scaling", [&] { return criterion_8(runs); }}},
      {9, {"augmentation contract", augmentation}},
      {10, {"search harness", search_harness}},
      {11, {"determinism", [&] { return criterion_11(runs); }}},
  };

  int failed = 0;
  int skipped = 0;
  for (int c : wanted) {
    const auto& [name, fn] = criteria.at(c);
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
    std::printf("criterion %2d %s  %s: %s\n", c, tag, name, o.detail.c_str());
    std::fflush(stdout);
    failed += o.status == Status::Fail;
    skipped += o.status == Status::Skip;
  }
  if (failed != 0) return 1;
  if (skipped == static_cast<int>(wanted.size())) return 77;
  return 0;
}
