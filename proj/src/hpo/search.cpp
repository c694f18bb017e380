#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <stdexcept>

#include "tmc/binary_io.hpp"
#include "tmc/hpo.hpp"
#include "tmc/parallel.hpp"

namespace tmc::hpo {

namespace {

std::string shortest(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

template <typename T>
T parse_value(std::string_view key, std::string_view v) {
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw std::invalid_argument("config: bad value for " + std::string(key) + ": '" + std::string(v) + "'");
  }
  return out;
}

}  // namespace

bool within_bounds(const SearchSpace& space, const tm::TMConfig& c, int image_side) {
  return c.window >= space.window_min && c.window <= std::min(space.window_max, image_side) &&
         c.clauses == space.clauses && c.threshold >= space.threshold_min && c.threshold <= space.threshold_max &&
         c.specificity >= space.specificity_min && c.specificity <= space.specificity_max;
}

tm::TMConfig UniformSampler::sample(const SearchSpace& space, int image_side, Rng& rng) {
  tm::TMConfig c;
  c.clauses = space.clauses;
  const int window_hi = std::max(space.window_min, std::min(space.window_max, image_side));
  c.window = static_cast<int>(rng.between(space.window_min, space.window_max));
  c.window = std::clamp(c.window, space.window_min, window_hi);
  c.weighted = rng.below(2) == 1;
  c.threshold = static_cast<int>(rng.between(space.threshold_min, space.threshold_max));
  c.specificity = space.specificity_min + rng.uniform() * (space.specificity_max - space.specificity_min);
  return c;
}

tm::TMConfig sample_config(const SearchSpace& space, Rng& rng, int image_side) {
  UniformSampler s;
  return s.sample(space, image_side, rng);
}

SearchResult run_search(const SearchSpace& space, std::span<const img::BitPlaneStack> stacks,
                        std::span<const int> labels, int classes, const img::Booleanizer& binding,
                        const SearchOptions& options) {
  if (options.trials < 1) throw std::invalid_argument("run_search: need at least one trial");
  if (stacks.empty()) throw std::invalid_argument("run_search: empty dataset");
  if (stacks.size() < 2) throw std::invalid_argument("run_search: dataset too small to hold out a slice");
  if (stacks.size() != labels.size()) throw std::invalid_argument("run_search: label count mismatch");

  const std::size_t holdout = std::max<std::size_t>(1, stacks.size() / 10);
  const std::size_t train_n = stacks.size() - holdout;
  const std::array<int, 3> shape = {stacks[0].height(), stacks[0].width(), stacks[0].planes()};
  const int image_side = std::min(shape[0], shape[1]);

  UniformSampler uniform;
  ConfigSampler& sampler = options.sampler ? *options.sampler : uniform;
  Rng sampling_rng(options.seed);

  // Configs are drawn up front, in trial order, so the outcome does not
  // depend on how trials are scheduled across workers.
  std::vector<Trial> trials(options.trials);
  for (int i = 0; i < options.trials; ++i) {
    Trial& trial = trials[i];
    trial.index = i;
    trial.epochs = options.epochs;
    trial.seed = options.seed + static_cast<std::uint64_t>(i);
    trial.config = static_cast<std::size_t>(i) < options.injected.size()
                       ? options.injected[i]
                       : sampler.sample(space, image_side, sampling_rng);
    trial.config.seed = trial.seed;
    trial.config.validate();
  }

  parallel_for(trials.size(), options.jobs, [&](std::size_t i) {
    Trial& trial = trials[i];
    const auto start = std::chrono::steady_clock::now();
    tm::SpecialistModel model(trial.config, classes, shape, binding);
    std::vector<tm::PatchSet> train;
    std::vector<tm::PatchSet> held;
    train.reserve(train_n);
    for (std::size_t k = 0; k < train_n; ++k) train.push_back(model.patches(stacks[k]));
    for (std::size_t k = train_n; k < stacks.size(); ++k) held.push_back(model.patches(stacks[k]));

    Rng rng(trial.seed);
    for (int e = 0; e < options.epochs; ++e) tm::train_epoch(model, train, labels.first(train_n), rng);
    trial.accuracy = tm::accuracy(model, held, labels.subspan(train_n));
    trial.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });

  SearchResult result;
  for (const auto& trial : trials) {
    if (options.on_trial) options.on_trial(trial);
    if (result.trials.empty() || trial.accuracy > result.best.accuracy) result.best = trial;
    result.trials.push_back(trial);
  }
  return result;
}

std::string trial_record(const Trial& t) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "{\"trial\":%d,\"clauses\":%d,\"T\":%d,\"s\":%.6f,\"window\":%d,\"weighted\":%s,"
                "\"epochs\":%d,\"seed\":%llu,\"accuracy\":%.6f,\"wall_seconds\":%.3f}",
                t.index, t.config.clauses, t.config.threshold, t.config.specificity, t.config.window,
                t.config.weighted ? "true" : "false", t.epochs, static_cast<unsigned long long>(t.seed), t.accuracy,
                t.wall_seconds);
  return buf;
}

std::string format_config(const tm::TMConfig& c) {
  std::string out;
  out += "clauses=" + std::to_string(c.clauses) + "\n";
  out += "T=" + std::to_string(c.threshold) + "\n";
  out += "s=" + shortest(c.specificity) + "\n";
  out += "window=" + std::to_string(c.window) + "\n";
  out += std::string("weighted=") + (c.weighted ? "true" : "false") + "\n";
  out += "states=" + std::to_string(c.states_per_action) + "\n";
  out += "seed=" + std::to_string(c.seed) + "\n";
  return out;
}

tm::TMConfig parse_config(std::string_view text) {
  tm::TMConfig c;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw std::invalid_argument("config: expected key=value");
    const auto key = line.substr(0, eq);
    const auto v = line.substr(eq + 1);
    if (key == "clauses") {
      c.clauses = parse_value<int>(key, v);
    } else if (key == "T") {
      c.threshold = parse_value<int>(key, v);
    } else if (key == "s") {
      c.specificity = parse_value<double>(key, v);
    } else if (key == "window") {
      c.window = parse_value<int>(key, v);
    } else if (key == "weighted") {
      if (v != "true" && v != "false") throw std::invalid_argument("config: weighted must be true or false");
      c.weighted = v == "true";
    } else if (key == "states") {
      c.states_per_action = parse_value<int>(key, v);
    } else if (key == "seed") {
      c.seed = parse_value<std::uint64_t>(key, v);
    } else {
      throw std::invalid_argument("config: unknown key '" + std::string(key) + "'");
    }
  }
  c.validate();
  return c;
}

void write_config(const std::filesystem::path& path, const tm::TMConfig& c) {
  const auto text = format_config(c);
  io::write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

tm::TMConfig read_config(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  return parse_config(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace tmc::hpo
