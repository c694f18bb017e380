// tmc: Booleanize CIFAR-10 batches, train specialists, evaluate them, fuse
// them into a composite and search hyperparameters.
//
// Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tmc/binary_io.hpp"
#include "tmc/composite.hpp"
#include "tmc/data.hpp"
#include "tmc/hpo.hpp"
#include "tmc/parallel.hpp"
#include "tmc/tm.hpp"

namespace {

using namespace tmc;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fixed(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string json_str(std::string_view s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + "\"";
}

/// Writes each record to stdout and, when open, to the log file.
class RecordSink {
 public:
  explicit RecordSink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw std::runtime_error("cannot open log file " + path);
    }
  }
  void emit(const std::string& line) {
    std::cout << line << '\n' << std::flush;
    if (file_.is_open()) file_ << line << '\n' << std::flush;
  }

 private:
  std::ofstream file_;
};

// ---------------------------------------------------------------------------
// Shared flags

struct TechniqueFlags {
  std::string technique = "thermometer";
  std::optional<int> t;
  std::optional<double> k;
  std::optional<int> block;
  std::optional<double> c;
  std::optional<double> sigma;
  std::optional<double> low;
  std::optional<double> high;
  std::optional<int> cell;
  std::optional<int> bins;

  void attach(CLI::App* cmd) {
    cmd->add_option("--technique", technique, "Booleanization technique or its canonical text")
        ->capture_default_str();
    cmd->add_option("--t", t, "Thermometer threshold count");
    cmd->add_option("--k", k, "Adaptive thermometer spread factor");
    cmd->add_option("--block", block, "Adaptive block size (pixels) or HOG block size (cells)");
    cmd->add_option("--c", c, "Adaptive threshold offset");
    cmd->add_option("--sigma", sigma, "Canny Gaussian sigma");
    cmd->add_option("--low", low, "Canny low threshold");
    cmd->add_option("--high", high, "Canny high threshold");
    cmd->add_option("--cell", cell, "HOG cell size");
    cmd->add_option("--bins", bins, "HOG orientation bins");
  }

  img::Booleanizer build() const {
    const auto colon = technique.find(':');
    const std::string name = technique.substr(0, colon);
    if (!img::technique_from_name(name)) {
      std::string msg = "unknown technique '" + name + "'; expected one of:";
      for (const auto& n : img::technique_names()) msg += " " + n;
      throw UsageError(msg);
    }
    std::string text = technique;
    bool first = colon == std::string::npos;
    auto put = [&](const char* key, const auto& v) {
      if (!v) return;
      text += first ? ":" : ",";
      first = false;
      text += key;
      text += "=";
      std::ostringstream s;
      s.precision(17);
      s << *v;
      text += s.str();
    };
    put("levels", t);
    put("k", k);
    put("block", block);
    put("c", c);
    put("sigma", sigma);
    put("low", low);
    put("high", high);
    put("cell", cell);
    put("bins", bins);
    try {
      return img::Booleanizer::parse(text);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
};

struct DataFlags {
  std::vector<std::string> files;
  std::string classes;
  std::size_t limit = 0;

  void attach(CLI::App* cmd, const char* name, const char* help, bool required) {
    auto* opt = cmd->add_option(name, files, help);
    if (required) opt->required();
  }
};

std::vector<int> parse_classes(const std::string& text) {
  std::vector<int> out;
  if (text.empty()) {
    for (int i = 0; i < data::kCifarClasses; ++i) out.push_back(i);
    return out;
  }
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    int id = -1;
    for (int i = 0; i < data::kCifarClasses; ++i) {
      if (data::kCifarClassNames[i] == item) id = i;
    }
    if (id < 0) {
      try {
        std::size_t used = 0;
        id = std::stoi(item, &used);
        if (used != item.size()) id = -1;
      } catch (const std::exception&) {
        id = -1;
      }
    }
    if (id < 0 || id >= data::kCifarClasses) throw UsageError("unknown class '" + item + "'");
    if (std::find(out.begin(), out.end(), id) != out.end()) throw UsageError("class '" + item + "' listed twice");
    out.push_back(id);
  }
  if (out.empty()) throw UsageError("--classes is empty");
  return out;
}

std::vector<std::string> class_labels(const std::vector<int>& classes) {
  std::vector<std::string> out;
  for (int c : classes) out.emplace_back(data::kCifarClassNames[c]);
  return out;
}

data::LabeledDataset load_dataset(const std::vector<std::string>& files, const std::vector<int>& classes,
                                  std::size_t limit) {
  std::vector<std::filesystem::path> paths(files.begin(), files.end());
  auto ds = data::select_classes(data::read_cifar10_files(paths), classes, limit);
  if (ds.empty()) throw std::runtime_error("no images of the selected classes");
  return ds;
}

std::optional<std::filesystem::path> cache_dir(const std::string& flag) {
  if (!flag.empty()) return std::filesystem::path(flag);
  return data::cache_dir_from_env();
}

std::vector<tm::PatchSet> patch_all(const tm::SpecialistModel& model, const data::BooleanizedSet& set, int jobs) {
  std::vector<tm::PatchSet> out(set.stacks.size());
  parallel_for(out.size(), jobs, [&](std::size_t i) { out[i] = model.patches(set.stacks[i]); });
  return out;
}

// ---------------------------------------------------------------------------
// Commands

struct Common {
  int jobs = default_jobs();
  std::string cache;
  std::string log;
};

struct BooleanizeCmd {
  DataFlags data;
  TechniqueFlags technique;
  bool augment = false;

  int run(const Common& common) {
    const auto b = technique.build();
    const auto classes = parse_classes(data.classes);
    const auto dir = cache_dir(common.cache);
    if (!dir) throw UsageError("no cache directory: pass --cache-dir or set TMC_CACHE_DIR");
    auto ds = load_dataset(data.files, classes, data.limit);
    if (augment) ds = data::augment(ds);
    const auto r = data::booleanize_dataset(ds, b, dir, common.jobs);
    RecordSink sink(common.log);
    sink.emit("{\"command\":\"booleanize\",\"images\":" + std::to_string(r.set.stacks.size()) +
              ",\"height\":" + std::to_string(r.set.height) + ",\"width\":" + std::to_string(r.set.width) +
              ",\"planes\":" + std::to_string(r.set.planes) + ",\"binding\":" + json_str(b.canonical()) +
              ",\"dataset_digest\":" + json_str(img::to_hex(data::dataset_digest(ds))) +
              ",\"cache\":" + json_str(r.cache_hit ? "hit" : "miss") +
              ",\"path\":" + json_str(r.path ? r.path->string() : "") + "}");
    return 0;
  }
};

struct ModelFlags {
  std::string config_file;
  std::optional<int> clauses;
  std::optional<int> threshold;
  std::optional<double> specificity;
  std::optional<int> window;
  std::optional<bool> weighted;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_file, "key=value config file (e.g. written by search)");
    cmd->add_option("--clauses", clauses, "Clauses per class");
    cmd->add_option("--T", threshold, "Feedback threshold T");
    cmd->add_option("--s", specificity, "Specificity s");
    cmd->add_option("--window", window, "Convolution window side");
    cmd->add_option("--weighted", weighted, "Weighted clauses (true/false)");
    cmd->add_option("--seed", seed, "Random seed");
  }

  tm::TMConfig build() const {
    tm::TMConfig c;
    try {
      if (!config_file.empty()) c = hpo::read_config(config_file);
      if (clauses) c.clauses = *clauses;
      if (threshold) c.threshold = *threshold;
      if (specificity) c.specificity = *specificity;
      if (window) c.window = *window;
      if (weighted) c.weighted = *weighted;
      if (seed) c.seed = *seed;
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

struct TrainCmd {
  DataFlags train;
  DataFlags test;
  TechniqueFlags technique;
  ModelFlags model;
  int epochs = 10;
  bool augment = false;
  std::string out = "model.tmsp";

  int run(const Common& common) {
    if (epochs < 1) throw UsageError("--epochs must be at least 1");
    const auto b = technique.build();
    const auto config = model.build();
    const auto classes = parse_classes(train.classes);
    const auto dir = cache_dir(common.cache);

    auto train_ds = load_dataset(train.files, classes, train.limit);
    if (augment) train_ds = data::augment(train_ds);
    const auto train_set = data::booleanize_dataset(train_ds, b, dir, common.jobs).set;

    std::optional<tm::SpecialistModel> built;
    try {
      built.emplace(config, static_cast<int>(classes.size()),
                    std::array<int, 3>{train_set.height, train_set.width, train_set.planes}, b);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    tm::SpecialistModel& m = *built;
    const auto train_x = patch_all(m, train_set, common.jobs);

    std::vector<tm::PatchSet> test_x;
    std::vector<int> test_y;
    if (!test.files.empty()) {
      const auto test_ds = load_dataset(test.files, classes, test.limit);
      test_x = patch_all(m, data::booleanize_dataset(test_ds, b, dir, common.jobs).set, common.jobs);
      test_y = test_ds.labels;
    }
    const bool on_test = !test_x.empty();
    const std::string split = on_test ? "test" : "train";

    RecordSink sink(common.log);
    Rng rng(config.seed);
    std::vector<double> history;
    for (int e = 1; e <= epochs; ++e) {
      tm::train_epoch(m, train_x, train_ds.labels, rng);
      const double acc = on_test ? tm::accuracy(m, test_x, test_y, common.jobs)
                                 : tm::accuracy(m, train_x, train_ds.labels, common.jobs);
      history.push_back(acc);
      sink.emit("{\"epoch\":" + std::to_string(e) + ",\"split\":" + json_str(split) + ",\"accuracy\":" + fixed(acc) +
                "}");
    }

    constexpr int kTrailing = 25;
    if (epochs >= kTrailing) {
      double mean = 0.0;
      for (int i = epochs - kTrailing; i < epochs; ++i) mean += history[i];
      mean /= kTrailing;
      double var = 0.0;
      for (int i = epochs - kTrailing; i < epochs; ++i) var += (history[i] - mean) * (history[i] - mean);
      var /= kTrailing - 1;
      sink.emit("{\"summary\":\"trailing_25_epochs\",\"split\":" + json_str(split) + ",\"mean\":" + fixed(mean) +
                ",\"sample_variance\":" + fixed(var, 8) + "}");
    } else {
      sink.emit("{\"summary\":\"final_epoch\",\"split\":" + json_str(split) + ",\"accuracy\":" + fixed(history.back()) +
                "}");
    }

    m.save(out);
    sink.emit("{\"model\":" + json_str(out) + ",\"digest\":" + json_str(img::to_hex(m.digest())) +
              ",\"binding\":" + json_str(b.canonical()) + "}");
    return 0;
  }
};

struct EvalCmd {
  std::string model_path;
  DataFlags data;
  std::string sums_out;

  int run(const Common& common) {
    const auto m = tm::SpecialistModel::load(model_path);
    const auto classes = parse_classes(data.classes);
    if (static_cast<int>(classes.size()) != m.classes()) {
      throw std::runtime_error("model has " + std::to_string(m.classes()) + " classes but " +
                               std::to_string(classes.size()) + " were selected");
    }
    const auto ds = load_dataset(data.files, classes, data.limit);
    const auto set = data::booleanize_dataset(ds, m.binding(), cache_dir(common.cache), common.jobs).set;
    const auto mat = composite::specialist_class_sums(m, set.stacks, 0, common.jobs);
    int correct = 0;
    for (int f = 0; f < mat.inputs; ++f) {
      int best = 0;
      for (int i = 1; i < mat.classes; ++i) {
        if (mat.at(f, i) > mat.at(f, best)) best = i;
      }
      correct += best == ds.labels[f];
    }
    if (!sums_out.empty()) io::write_file_atomic(sums_out, composite::encode_class_sums(mat));
    RecordSink sink(common.log);
    sink.emit("{\"command\":\"eval\",\"images\":" + std::to_string(ds.size()) + ",\"binding\":" +
              json_str(m.binding().canonical()) + ",\"accuracy\":" + fixed(static_cast<double>(correct) / ds.size()) +
              "}");
    return 0;
  }
};

struct ComposeCmd {
  std::vector<std::string> models;
  std::string manifest_in;
  DataFlags data;
  std::string out;
  bool freeze = false;

  int run(const Common& common) {
    if (models.empty() == manifest_in.empty()) throw UsageError("give either --model (repeatable) or --manifest");
    composite::CompositeModel comp;
    std::vector<std::string> member_paths;
    if (!manifest_in.empty()) {
      const auto man = composite::read_manifest(manifest_in);
      comp = composite::load_composite(man, std::filesystem::path(manifest_in).parent_path());
      for (const auto& mem : man.members) member_paths.push_back(mem.model.generic_string());
    } else {
      for (const auto& p : models) {
        auto m = tm::SpecialistModel::load(p);
        try {
          comp.add_specialist(std::move(m));
        } catch (const std::invalid_argument& e) {
          throw std::runtime_error(p + ": " + e.what());
        }
        member_paths.push_back(p);
      }
    }
    if (comp.size() == 0) throw std::runtime_error("composite has no members");

    const auto classes = parse_classes(data.classes);
    if (static_cast<int>(classes.size()) != comp.classes()) {
      throw std::runtime_error("members have " + std::to_string(comp.classes()) + " classes but " +
                               std::to_string(classes.size()) + " were selected");
    }
    const auto ds = load_dataset(data.files, classes, data.limit);
    if (freeze) comp.freeze_alphas(ds.images, common.jobs);
    const auto mats = comp.class_sums(ds.images, common.jobs);
    const auto alphas = comp.alphas(mats);
    const auto pred = composite::composite_predict(mats, alphas);

    RecordSink sink(common.log);
    const double n = static_cast<double>(ds.size());
    for (int t = 0; t < comp.size(); ++t) {
      const auto own = composite::composite_predict(std::span(&mats[t], 1), std::span(&alphas[t], 1));
      int correct = 0;
      for (std::size_t f = 0; f < own.size(); ++f) correct += own[f] == ds.labels[f];
      sink.emit("{\"member\":" + json_str(member_paths[t]) + ",\"binding\":" +
                json_str(comp.members()[t].model.binding().canonical()) + ",\"alpha\":" + fixed(alphas[t]) +
                ",\"accuracy\":" + fixed(correct / n) + "}");
    }
    int correct = 0;
    for (std::size_t f = 0; f < pred.size(); ++f) correct += pred[f] == ds.labels[f];
    sink.emit("{\"composite_accuracy\":" + fixed(correct / n) + ",\"members\":" + std::to_string(comp.size()) +
              ",\"images\":" + std::to_string(ds.size()) + "}");

    if (!out.empty()) {
      composite::Manifest man;
      man.class_labels = class_labels(classes);
      for (int t = 0; t < comp.size(); ++t) {
        man.members.push_back({member_paths[t], comp.members()[t].model.binding().canonical(),
                               comp.members()[t].frozen_alpha});
      }
      composite::write_manifest(out, man);
    }
    return 0;
  }
};

struct SearchCmd {
  DataFlags data;
  TechniqueFlags technique;
  int trials = 50;
  int epochs = 5;
  int clauses = 2000;
  std::uint64_t seed = 1;
  std::string out = "best.cfg";

  int run(const Common& common) {
    if (trials < 1) throw UsageError("--trials must be at least 1");
    if (epochs < 1) throw UsageError("--epochs must be at least 1");
    if (clauses < 2 || clauses % 2 != 0) throw UsageError("--clauses must be even and at least 2");
    const auto b = technique.build();
    const auto classes = parse_classes(data.classes);
    const auto ds = load_dataset(data.files, classes, data.limit);
    if (ds.size() < 2) throw std::runtime_error("search needs at least two images");
    const auto set = data::booleanize_dataset(ds, b, cache_dir(common.cache), common.jobs).set;

    hpo::SearchSpace space;
    space.clauses = clauses;
    hpo::SearchOptions opts;
    opts.trials = trials;
    opts.epochs = epochs;
    opts.seed = seed;
    opts.jobs = common.jobs;
    RecordSink sink(common.log);
    opts.on_trial = [&](const hpo::Trial& t) { sink.emit(hpo::trial_record(t)); };
    const auto result =
        hpo::run_search(space, set.stacks, ds.labels, static_cast<int>(classes.size()), b, opts);
    hpo::write_config(out, result.best.config);
    std::cerr << "best trial " << result.best.index << " accuracy " << fixed(result.best.accuracy) << " -> " << out
              << '\n';
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tsetlin Machine specialists and composites for Booleanized images"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--jobs", common.jobs, "Worker threads")->capture_default_str();
  app.add_option("--cache-dir", common.cache, "Booleanized cache directory (default: $TMC_CACHE_DIR)");
  app.add_option("--log", common.log, "Also write the line-delimited records to this file");

  BooleanizeCmd booleanize;
  auto* b = app.add_subcommand("booleanize", "Booleanize a dataset into the cache");
  booleanize.data.attach(b, "--data", "CIFAR-10 binary batch files", true);
  b->add_option("--classes", booleanize.data.classes, "Class names or ids, comma separated (default all)");
  b->add_option("--limit", booleanize.data.limit, "Images per class (0 = all)");
  b->add_flag("--augment", booleanize.augment, "Append horizontal flips");
  booleanize.technique.attach(b);

  TrainCmd train;
  auto* t = app.add_subcommand("train", "Train one specialist");
  train.train.attach(t, "--data", "Training CIFAR-10 batch files", true);
  train.test.attach(t, "--test", "Test CIFAR-10 batch files for per-epoch accuracy", false);
  t->add_option("--classes", train.train.classes, "Class names or ids, comma separated (default all)");
  t->add_option("--limit", train.train.limit, "Training images per class (0 = all)");
  t->add_option("--test-limit", train.test.limit, "Test images per class (0 = all)");
  t->add_option("--epochs", train.epochs)->capture_default_str();
  t->add_flag("--augment", train.augment, "Add horizontal flips to the training set");
  t->add_option("--out", train.out, "Model file")->capture_default_str();
  train.technique.attach(t);
  train.model.attach(t);

  EvalCmd eval;
  auto* e = app.add_subcommand("eval", "Evaluate a specialist");
  e->add_option("--model", eval.model_path, "Model file")->required();
  eval.data.attach(e, "--data", "CIFAR-10 batch files", true);
  e->add_option("--classes", eval.data.classes, "Class names or ids the model was trained on");
  e->add_option("--limit", eval.data.limit, "Images per class (0 = all)");
  e->add_option("--sums-out", eval.sums_out, "Write the class-sum matrix (TMCS) here");

  ComposeCmd compose;
  auto* c = app.add_subcommand("compose", "Fuse specialists and evaluate the composite");
  c->add_option("--model", compose.models, "Member model file (repeatable)");
  c->add_option("--manifest", compose.manifest_in, "Existing composite manifest");
  compose.data.attach(c, "--data", "CIFAR-10 batch files", true);
  c->add_option("--classes", compose.data.classes, "Class names or ids the members were trained on");
  c->add_option("--limit", compose.data.limit, "Images per class (0 = all)");
  c->add_flag("--freeze", compose.freeze, "Freeze each alpha from this batch and store it in the manifest");
  c->add_option("--out", compose.out, "Write the composite manifest here");

  SearchCmd search;
  auto* s = app.add_subcommand("search", "Random hyperparameter search");
  search.data.attach(s, "--data", "CIFAR-10 batch files", true);
  s->add_option("--classes", search.data.classes, "Class names or ids, comma separated (default all)");
  s->add_option("--limit", search.data.limit, "Images per class (0 = all)");
  s->add_option("--trials", search.trials)->capture_default_str();
  s->add_option("--epochs", search.epochs)->capture_default_str();
  s->add_option("--clauses", search.clauses, "Fixed clause count")->capture_default_str();
  s->add_option("--seed", search.seed)->capture_default_str();
  s->add_option("--out", search.out, "Best config file")->capture_default_str();
  search.technique.attach(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return 2;
  }

  try {
    if (common.jobs < 1) throw UsageError("--jobs must be at least 1");
    if (b->parsed()) return booleanize.run(common);
    if (t->parsed()) return train.run(common);
    if (e->parsed()) return eval.run(common);
    if (c->parsed()) return compose.run(common);
    if (s->parsed()) return search.run(common);
  } catch (const UsageError& err) {
    std::cerr << "tmc: " << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "tmc: " << err.what() << '\n';
    return 1;
  }
  return 2;
}
