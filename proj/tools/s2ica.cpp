// s2ica: command-line front end for the glyph-world pipeline.
//
// Every stage reads and writes fixed file names inside a run directory
// (--out), so stages chain by pointing at the same directory.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "s2ica/experiment.hpp"
#include "s2ica/gradcheck.hpp"
#include "s2ica/model_io.hpp"

using namespace s2ica;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Run configuration: ExperimentConfig::toy(seed) defaults, then --config keys,
// then flags.

json train_to_json(const TrainConfig& t) {
  return {{"epochs", t.epochs},           {"lr", t.learning_rate},      {"momentum", t.momentum},
          {"weight_decay", t.weight_decay}, {"batch_size", t.batch_size}, {"seed", t.seed}};
}

void train_from_json(const json& j, TrainConfig& t) {
  t.epochs = j.value("epochs", t.epochs);
  t.learning_rate = j.value("lr", t.learning_rate);
  t.momentum = j.value("momentum", t.momentum);
  t.weight_decay = j.value("weight_decay", t.weight_decay);
  t.batch_size = j.value("batch_size", t.batch_size);
  t.seed = j.value("seed", t.seed);
}

struct RunConfig {
  ExperimentConfig exp;
  bool pyramid = true;
  bool use_su = true;

  json to_json() const {
    json classes = json::array();
    for (const auto& c : exp.synth.classes) {
      json names = json::array();
      for (Glyph g : c) names.push_back(to_string(g));
      classes.push_back(names);
    }
    return {
        {"seed", exp.seed},
        {"threads", exp.threads},
        {"synth",
         {{"canvas", exp.synth.canvas},
          {"classes", classes},
          {"train_per_class", exp.synth.train_per_class},
          {"test_per_class", exp.synth.test_per_class},
          {"scale_min", exp.synth.scale_min},
          {"scale_max", exp.synth.scale_max},
          {"base_glyph", exp.synth.base_glyph},
          {"intensity_min", exp.synth.intensity_min},
          {"intensity_max", exp.synth.intensity_max},
          {"noise_std", exp.synth.noise_std},
          {"layout_stress_test", exp.synth.layout_stress_test},
          {"seed", exp.synth.seed}}},
        {"source_per_glyph", exp.source_per_glyph},
        {"patches_per_image", exp.patches_per_image},
        {"hidden_width", exp.hidden_width},
        {"pretrain", train_to_json(exp.pretrain)},
        {"transfer", train_to_json(exp.transfer)},
        {"finetune", train_to_json(exp.finetune)},
        {"su",
         {{"enabled", use_su},
          {"blocks", exp.su.blocks},
          {"probability", exp.su.probability},
          {"infer_apply", exp.su.infer_apply}}},
        {"descriptor",
         {{"scales", exp.descriptor.pyramid.scales},
          {"pyramid", pyramid},
          {"base", exp.descriptor.pyramid.base},
          {"patch_size", exp.descriptor.patch.side},
          {"stride", exp.descriptor.patch.stride},
          {"pooling", to_string(exp.descriptor.pooling)}}},
        {"svm",
         {{"C", exp.svm.C},
          {"epochs", exp.svm.epochs},
          {"normalize", exp.svm.normalize},
          {"standardize", exp.svm.standardize},
          {"seed", exp.svm.seed}}},
    };
  }

  void merge(const json& j) {
    exp.threads = j.value("threads", exp.threads);
    if (j.contains("synth")) {
      const auto& s = j["synth"];
      exp.synth.canvas = s.value("canvas", exp.synth.canvas);
      if (s.contains("classes")) {
        exp.synth.classes.clear();
        for (const auto& c : s["classes"]) {
          std::vector<Glyph> glyphs;
          for (const auto& g : c) glyphs.push_back(glyph_from_string(g.get<std::string>()));
          exp.synth.classes.push_back(glyphs);
        }
      }
      exp.synth.train_per_class = s.value("train_per_class", exp.synth.train_per_class);
      exp.synth.test_per_class = s.value("test_per_class", exp.synth.test_per_class);
      exp.synth.scale_min = s.value("scale_min", exp.synth.scale_min);
      exp.synth.scale_max = s.value("scale_max", exp.synth.scale_max);
      exp.synth.base_glyph = s.value("base_glyph", exp.synth.base_glyph);
      exp.synth.intensity_min = s.value("intensity_min", exp.synth.intensity_min);
      exp.synth.intensity_max = s.value("intensity_max", exp.synth.intensity_max);
      exp.synth.noise_std = s.value("noise_std", exp.synth.noise_std);
      exp.synth.layout_stress_test = s.value("layout_stress_test", exp.synth.layout_stress_test);
      exp.synth.seed = s.value("seed", exp.synth.seed);
    }
    exp.source_per_glyph = j.value("source_per_glyph", exp.source_per_glyph);
    exp.patches_per_image = j.value("patches_per_image", exp.patches_per_image);
    exp.hidden_width = j.value("hidden_width", exp.hidden_width);
    if (j.contains("pretrain")) train_from_json(j["pretrain"], exp.pretrain);
    if (j.contains("transfer")) train_from_json(j["transfer"], exp.transfer);
    if (j.contains("finetune")) train_from_json(j["finetune"], exp.finetune);
    if (j.contains("su")) {
      const auto& s = j["su"];
      use_su = s.value("enabled", use_su);
      exp.su.blocks = s.value("blocks", exp.su.blocks);
      exp.su.probability = s.value("probability", exp.su.probability);
      exp.su.infer_apply = s.value("infer_apply", exp.su.infer_apply);
    }
    if (j.contains("descriptor")) {
      const auto& d = j["descriptor"];
      exp.descriptor.pyramid.scales = d.value("scales", exp.descriptor.pyramid.scales);
      pyramid = d.value("pyramid", pyramid);
      exp.descriptor.pyramid.base = d.value("base", exp.descriptor.pyramid.base);
      exp.descriptor.patch.side = d.value("patch_size", exp.descriptor.patch.side);
      exp.descriptor.patch.stride = d.value("stride", exp.descriptor.patch.stride);
      if (d.contains("pooling")) exp.descriptor.pooling = pooling_from_string(d["pooling"].get<std::string>());
    }
    if (j.contains("svm")) {
      const auto& s = j["svm"];
      exp.svm.C = s.value("C", exp.svm.C);
      exp.svm.epochs = s.value("epochs", exp.svm.epochs);
      exp.svm.normalize = s.value("normalize", exp.svm.normalize);
      exp.svm.standardize = s.value("standardize", exp.svm.standardize);
      exp.svm.seed = s.value("seed", exp.svm.seed);
    }
  }

  /// Descriptor pooling used by describe: no-pyramid keeps the unit scale.
  DescriptorConfig descriptor() const {
    DescriptorConfig d = exp.descriptor;
    if (!pyramid) {
      std::size_t best = 0;
      const auto& s = d.pyramid.scales;
      for (std::size_t i = 1; i < s.size(); ++i) {
        if (std::abs(s[i] - 1.0) < std::abs(s[best] - 1.0)) best = i;
      }
      d.pyramid.scales = {s.at(best)};
    }
    return d;
  }
};

/// Values of the shared flags; optionals are set only when given.
struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<Index> threads;
  std::string out;
  std::string in;
  std::optional<Index> blocks;
  std::optional<double> su_prob;
  std::optional<std::string> scales;
  std::optional<Index> patch_size;
  std::optional<Index> stride;
  std::optional<Index> epochs;
  std::optional<double> lr;
  std::optional<double> c;
  std::optional<std::string> pool;
  bool no_pyramid = false;
  bool no_su = false;
  Index label = 0;
};

std::vector<double> parse_scales(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigurationError("--scales expects comma-separated numbers, got '" + text + "'");
    }
  }
  return out;
}

/// Which training stage --epochs and --lr refer to for each subcommand.
enum class Stage { none, pretrain, transfer, finetune, svm };

RunConfig resolve(const Flags& f, Stage stage) {
  const std::uint64_t seed = f.seed.value_or(0);
  RunConfig rc{ExperimentConfig::toy(seed)};
  if (!f.config.empty()) {
    json j;
    try {
      j = json::parse(read_file(f.config));
    } catch (const json::parse_error& e) {
      throw FormatError(std::string("config is not valid JSON: ") + e.what(), e.byte);
    }
    try {
      // A config seed re-derives every stage seed before other keys apply.
      if (j.contains("seed") && !f.seed) rc.exp = ExperimentConfig::toy(j["seed"].get<std::uint64_t>());
      rc.merge(j);
    } catch (const json::exception& e) {
      throw ConfigurationError(std::string("bad config value: ") + e.what());
    }
  }
  if (f.threads) rc.exp.threads = *f.threads;
  if (f.blocks) rc.exp.su.blocks = *f.blocks;
  if (f.su_prob) rc.exp.su.probability = *f.su_prob;
  if (f.scales) rc.exp.descriptor.pyramid.scales = parse_scales(*f.scales);
  if (f.patch_size) rc.exp.descriptor.patch.side = *f.patch_size;
  if (f.stride) rc.exp.descriptor.patch.stride = *f.stride;
  if (f.pool) rc.exp.descriptor.pooling = pooling_from_string(*f.pool);
  if (f.c) rc.exp.svm.C = *f.c;
  if (f.no_pyramid) rc.pyramid = false;
  if (f.no_su) rc.use_su = false;
  TrainConfig* t = stage == Stage::pretrain   ? &rc.exp.pretrain
                   : stage == Stage::transfer ? &rc.exp.transfer
                   : stage == Stage::finetune ? &rc.exp.finetune
                                              : nullptr;
  if (t) {
    if (f.epochs) t->epochs = *f.epochs;
    if (f.lr) t->learning_rate = *f.lr;
  } else if (stage == Stage::svm && f.epochs) {
    rc.exp.svm.epochs = *f.epochs;
  }
  rc.exp.validate();
  return rc;
}

// ---------------------------------------------------------------------------
// Output helpers

fs::path require_dir(const std::string& out) {
  if (out.empty()) throw ConfigurationError("--out is required");
  fs::create_directories(out);
  return out;
}

void echo_config(const fs::path& dir, const std::string& command, const RunConfig& rc) {
  write_file_atomic(dir / (command + "_config.json"), rc.to_json().dump(2) + "\n");
}

void write_metrics(const fs::path& path, const TrainReport& r) {
  std::ostringstream out;
  out << "epoch,loss,accuracy\n";
  out.precision(9);
  for (const auto& e : r.epochs) out << e.epoch << ',' << e.loss << ',' << e.accuracy << '\n';
  write_file_atomic(path, out.str());
}

void summary(json j) {
  j["status"] = "ok";
  std::cout << j.dump() << std::endl;
}

std::vector<FeatureMap<float>> as_inputs(const std::vector<LabeledImage>& items, std::vector<Index>& labels) {
  std::vector<FeatureMap<float>> out;
  for (const auto& item : items) {
    out.push_back(to_grayscale(item.image).to_feature_map());
    labels.push_back(item.label);
  }
  return out;
}

fs::path require_in(const Flags& f, const char* what) {
  if (f.in.empty()) throw ConfigurationError(std::string("--in is required (") + what + ")");
  return f.in;
}

// ---------------------------------------------------------------------------
// Subcommands

void cmd_synth_gen(const Flags& f) {
  const auto rc = resolve(f, Stage::none);
  const auto dir = require_dir(f.out);
  const auto ds = generate_dataset(rc.exp.synth);
  save_split(dir, "train", ds.train, ds.class_names);
  save_split(dir, "test", ds.test, ds.class_names);
  const auto source = generate_source_set(rc.exp.source_per_glyph, rc.exp.descriptor.patch.side, rc.exp.synth.noise_std,
                                          derive_seed(rc.exp.seed, 6));
  std::vector<std::string> glyph_names;
  for (int g = 0; g < kGlyphCount; ++g) glyph_names.push_back(to_string(Glyph(g)));
  save_split(dir, "source", source, glyph_names);
  echo_config(dir, "synth-gen", rc);
  summary({{"command", "synth-gen"},
           {"out", dir.string()},
           {"classes", ds.class_names},
           {"train", ds.train.size()},
           {"test", ds.test.size()},
           {"source", source.size()}});
}

void cmd_pretrain(const Flags& f) {
  const auto rc = resolve(f, Stage::pretrain);
  const auto data = require_in(f, "dataset directory");
  const auto dir = require_dir(f.out);
  std::vector<std::string> glyphs;
  const auto source = load_split(data, "source", &glyphs);
  std::vector<Index> labels;
  const auto x = as_inputs(source, labels);
  TrainConfig cfg = rc.exp.pretrain;
  cfg.threads = rc.exp.threads;
  TrainReport report;
  const auto side = rc.exp.descriptor.patch.side;
  const auto net = pretrain(NetworkSpec::toy(Index(glyphs.size()), side), x, labels, cfg,
                            InitConfig{derive_seed(rc.exp.seed, 7)}, {}, &report);
  save_model(dir / "base.s2m", net);
  write_metrics(dir / "pretrain_metrics.csv", report);
  echo_config(dir, "pretrain", rc);
  summary({{"command", "pretrain"},
           {"model", (dir / "base.s2m").string()},
           {"epochs", report.epochs.size()},
           {"final_loss", report.epochs.back().loss},
           {"final_accuracy", report.epochs.back().accuracy}});
}

/// The fine-tuning patch set; extract-conv and finetune draw the same one.
void training_patches(const RunConfig& rc, const fs::path& data, std::vector<FeatureMap<float>>& patches,
                      std::vector<Index>& labels) {
  const auto train = load_split(data, "train");
  sample_patches(train, rc.exp.descriptor.patch, rc.exp.patches_per_image, derive_seed(rc.exp.seed, 8), patches,
                 labels);
}

void cmd_extract_conv(const Flags& f) {
  const auto rc = resolve(f, Stage::none);
  const auto data = require_in(f, "dataset directory");
  const auto dir = require_dir(f.out);
  const auto base = load_model(dir / "base.s2m");
  std::vector<FeatureMap<float>> patches;
  std::vector<Index> labels;
  training_patches(rc, data, patches, labels);
  const auto features = extract_conv_features(base, patches);
  save_descriptor_table(dir / "conv_features.s2f", features);
  save_labels(dir / "conv_labels.txt", labels);
  echo_config(dir, "extract-conv", rc);
  summary({{"command", "extract-conv"},
           {"features", (dir / "conv_features.s2f").string()},
           {"count", features.size()},
           {"length", features.empty() ? 0 : features.front().size()}});
}

void cmd_train_transfernet(const Flags& f) {
  const auto rc = resolve(f, Stage::transfer);
  const auto dir = require_dir(f.out);
  const auto features = load_descriptor_table(dir / "conv_features.s2f");
  const auto labels = load_labels(dir / "conv_labels.txt");
  Index classes = 0;
  for (Index l : labels) classes = std::max(classes, l + 1);
  TrainConfig cfg = rc.exp.transfer;
  cfg.threads = rc.exp.threads;
  TrainReport report;
  const auto net = train_transfernet(features, labels, TransferNetSpec{rc.exp.hidden_width, classes}, cfg,
                                     InitConfig{derive_seed(rc.exp.seed, 9)}, {}, &report);
  save_model(dir / "transfernet.s2m", net);
  write_metrics(dir / "transfernet_metrics.csv", report);
  echo_config(dir, "train-transfernet", rc);
  summary({{"command", "train-transfernet"},
           {"model", (dir / "transfernet.s2m").string()},
           {"final_loss", report.epochs.back().loss},
           {"final_accuracy", report.epochs.back().accuracy}});
}

void cmd_graft(const Flags& f) {
  const auto rc = resolve(f, Stage::none);
  const auto dir = require_dir(f.out);
  const auto combined = graft(load_model(dir / "base.s2m"), load_model(dir / "transfernet.s2m"));
  save_model(dir / "combined.s2m", combined);
  echo_config(dir, "graft", rc);
  summary({{"command", "graft"},
           {"model", (dir / "combined.s2m").string()},
           {"conv_layers", combined.spec().count_conv()},
           {"fc_layers", combined.spec().count_fc()}});
}

void cmd_finetune(const Flags& f) {
  const auto rc = resolve(f, Stage::finetune);
  const auto data = require_in(f, "dataset directory");
  const auto dir = require_dir(f.out);
  const auto combined = load_model(dir / "combined.s2m");
  std::vector<FeatureMap<float>> patches;
  std::vector<Index> labels;
  training_patches(rc, data, patches, labels);
  TrainConfig cfg = rc.exp.finetune;
  cfg.threads = rc.exp.threads;
  TrainReport report;
  const bool with_su = rc.use_su;
  const auto net = finetune(combined, patches, labels, cfg, with_su, rc.exp.su, {}, &report);
  const std::string name = with_su ? "w_su" : "w";
  save_model(dir / (name + ".s2m"), net);
  write_metrics(dir / ("finetune_" + name + "_metrics.csv"), report);
  echo_config(dir, "finetune_" + name, rc);
  summary({{"command", "finetune"},
           {"variant", net.variant()},
           {"model", (dir / (name + ".s2m")).string()},
           {"final_loss", report.epochs.back().loss},
           {"final_accuracy", report.epochs.back().accuracy}});
}

void cmd_describe(const Flags& f) {
  const auto rc = resolve(f, Stage::none);
  const auto data = require_in(f, "dataset directory");
  const auto dir = require_dir(f.out);
  const auto w = load_model(dir / "w.s2m");
  std::optional<Net> w_su;
  if (rc.use_su) w_su = load_model(dir / "w_su.s2m");
  const auto dcfg = rc.descriptor();
  json counts;
  for (const std::string split : {"train", "test"}) {
    const auto items = load_split(data, split);
    std::vector<FeatureVector> rows(items.size());
    std::vector<Index> labels;
    for (const auto& item : items) labels.push_back(item.label);
    detail::parallel_for(Index(items.size()), rc.exp.threads, [&](Index i) {
      rows[std::size_t(i)] = describe_image(items[std::size_t(i)].image, w, w_su ? &*w_su : nullptr, dcfg);
    });
    save_descriptor_table(dir / (split + "_descriptors.s2f"), rows);
    save_labels(dir / (split + "_labels.txt"), labels);
    counts[split] = rows.size();
    if (!rows.empty()) counts["length"] = rows.front().size();
  }
  echo_config(dir, "describe", rc);
  summary({{"command", "describe"}, {"out", dir.string()}, {"descriptors", counts}});
}

void cmd_train_svm(const Flags& f) {
  const auto rc = resolve(f, Stage::svm);
  const auto dir = require_dir(f.out);
  const auto x = load_descriptor_table(dir / "train_descriptors.s2f");
  const auto y = load_labels(dir / "train_labels.txt");
  SvmHistory history;
  const auto model = train_svm(x, y, rc.exp.svm, &history);
  save_svm(dir / "svm.s2s", model);
  std::ostringstream csv;
  csv << "epoch,loss,accuracy\n";
  csv.precision(9);
  for (std::size_t e = 0; e < history.accuracy.size(); ++e) {
    double loss = 0;
    for (const auto& per_class : history.objective) loss += per_class[e];
    csv << e + 1 << ',' << loss / double(history.objective.size()) << ',' << history.accuracy[e] << '\n';
  }
  write_file_atomic(dir / "svm_metrics.csv", csv.str());
  echo_config(dir, "train-svm", rc);
  summary({{"command", "train-svm"},
           {"model", (dir / "svm.s2s").string()},
           {"classes", model.classes()},
           {"dimension", model.dimension()},
           {"train_accuracy", history.accuracy.back()}});
}

void cmd_evaluate(const Flags& f) {
  const auto rc = resolve(f, Stage::none);
  const auto dir = require_dir(f.out);
  const auto model = load_svm(dir / "svm.s2s");
  const auto x = load_descriptor_table(dir / "test_descriptors.s2f");
  const auto y = load_labels(dir / "test_labels.txt");
  const auto e = evaluate(model, x, y);
  save_confusion_csv(dir / "confusion.csv", e.confusion);
  echo_config(dir, "evaluate", rc);
  summary({{"command", "evaluate"},
           {"accuracy", e.accuracy},
           {"test", x.size()},
           {"confusion", (dir / "confusion.csv").string()}});
}

void cmd_heatmap(const Flags& f) {
  const auto rc = resolve(f, Stage::none);
  const auto image = load_image(require_in(f, "image file"));
  const auto dir = require_dir(f.out);
  const auto w = load_model(dir / "w.s2m");
  std::optional<Net> w_su;
  if (rc.use_su) w_su = load_model(dir / "w_su.s2m");
  const auto svm = load_svm(dir / "svm.s2s");
  const auto map = contribution_map(image, w, w_su ? &*w_su : nullptr, svm, f.label, rc.descriptor());
  save_image(dir / "heatmap.pgm", map.heat);
  std::ostringstream csv;
  csv.precision(9);
  for (Index r = 0; r < map.rows(); ++r) {
    for (Index c = 0; c < map.cols(); ++c) csv << (c ? "," : "") << map.scores(r, c);
    csv << '\n';
  }
  write_file_atomic(dir / "contribution.csv", csv.str());
  echo_config(dir, "heatmap", rc);
  summary({{"command", "heatmap"},
           {"image", (dir / "heatmap.pgm").string()},
           {"grid", {map.rows(), map.cols()}},
           {"label", f.label}});
}

void cmd_shuffle_demo(const Flags& f) {
  const auto image = load_image(require_in(f, "image file"));
  const auto dir = require_dir(f.out);
  const Index blocks = f.blocks.value_or(4);
  FeatureMap<float> m(image.height, image.width, image.channels, 1);
  m.data() = image.data.matrix();
  const auto shuffled = shuffle_alg1(m, blocks).first;
  Image out = image;
  out.data = shuffled.data().array();
  save_image(dir / "shuffled.pgm", out);
  summary({{"command", "shuffle-demo"}, {"image", (dir / "shuffled.pgm").string()}, {"blocks", blocks}});
}

int cmd_gradcheck(const Flags& f) {
  const auto results = gradient_suite(f.seed.value_or(1));
  constexpr double threshold = 1e-5;
  bool ok = true;
  json checks = json::array();
  std::ostringstream csv;
  csv << "check,max_rel_error,entries\n";
  for (const auto& r : results) {
    const bool pass = r.max_rel_error <= threshold;
    ok = ok && pass;
    std::fprintf(stderr, "%-12s max rel error %.3e over %lld entries  %s\n", r.name.c_str(), r.max_rel_error,
                 static_cast<long long>(r.checked), pass ? "ok" : "FAIL");
    checks.push_back({{"name", r.name}, {"max_rel_error", r.max_rel_error}, {"pass", pass}});
    csv << r.name << ',' << r.max_rel_error << ',' << r.checked << '\n';
  }
  if (!f.out.empty()) write_file_atomic(require_dir(f.out) / "gradcheck.csv", csv.str());
  json s{{"command", "gradcheck"}, {"threshold", threshold}, {"checks", checks}, {"status", ok ? "ok" : "fail"}};
  std::cout << s.dump() << std::endl;
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layout- and scale-robust scene descriptors on synthetic glyph scenes"};
  app.require_subcommand(1);
  Flags f;

  struct Spec {
    const char* name;
    const char* help;
    bool training;
    bool descriptor;
  };
  const std::vector<Spec> specs{
      {"synth-gen", "Generate the glyph-world train/test splits and the single-glyph source set", false, false},
      {"pretrain", "Train the toy network on the source set (--in dataset) into <out>/base.s2m", true, false},
      {"extract-conv", "Sample training patches and store last-conv features of base.s2m", false, false},
      {"train-transfernet", "Train the fully connected TransferNet on the stored conv features", true, false},
      {"graft", "Put the TransferNet on top of the base conv stack as <out>/combined.s2m", false, false},
      {"finetune", "Fine-tune combined.s2m end to end into w.s2m (--no-su) or w_su.s2m", true, false},
      {"describe", "Build train/test descriptor tables from w.s2m and w_su.s2m", false, true},
      {"train-svm", "Train the one-vs-rest linear SVM on the train descriptors", true, false},
      {"evaluate", "Score the test descriptors and write confusion.csv", false, false},
      {"heatmap", "Render per-patch contributions of an image (--in) to class --label", false, true},
      {"shuffle-demo", "Write the block-shuffled version of an image (--in)", false, false},
      {"gradcheck", "Finite-difference check of every layer and the toy network", false, false},
  };

  for (const auto& s : specs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    const std::string name = s.name;
    sub->add_option("--config", f.config, "JSON run configuration; flags override its keys")->check(CLI::ExistingFile);
    sub->add_option("--seed", f.seed, "Master seed; every stage seed derives from it");
    sub->add_option("--threads", f.threads, "Worker thread cap");
    sub->add_option("--out", f.out, name == "synth-gen" ? "Dataset directory to write" : "Run directory");
    if (name != "train-transfernet" && name != "graft" && name != "train-svm" && name != "evaluate" &&
        name != "gradcheck") {
      const char* what = name == "heatmap" || name == "shuffle-demo" ? "Input image (PGM/PPM)" : "Dataset directory";
      if (name != "synth-gen") sub->add_option("--in", f.in, what);
    }
    if (name == "finetune" || name == "shuffle-demo") {
      sub->add_option("--blocks", f.blocks, "SU block count n (perfect square, even root)");
    }
    if (name == "finetune") sub->add_option("--su-prob", f.su_prob, "Probability of shuffling a training sample");
    if (name == "finetune" || s.descriptor) sub->add_flag("--no-su", f.no_su, "Fine-tune / describe without the SU network");
    if (s.descriptor || name == "synth-gen" || name == "pretrain" || name == "extract-conv" || name == "finetune") {
      sub->add_option("--patch-size", f.patch_size, "Patch side in pixels (the network input side)");
    }
    if (s.descriptor) {
      sub->add_option("--scales", f.scales, "Pyramid scales")->default_str("0.75,1.0,1.25");
      sub->add_option("--stride", f.stride, "Patch stride in pixels");
      sub->add_option("--pool", f.pool, "Pooling across patches and scales")->check(CLI::IsMember({"max", "mean"}));
      sub->add_flag("--no-pyramid", f.no_pyramid, "Use only the unit scale");
    }
    if (s.training) {
      sub->add_option("--epochs", f.epochs, "Training epochs of this stage");
      if (name != "train-svm") sub->add_option("--lr", f.lr, "Initial learning rate of this stage");
    }
    if (name == "train-svm") sub->add_option("--C", f.c, "SVM regularization C (lambda = 1/C)");
    if (name == "heatmap") sub->add_option("--label", f.label, "Class whose score is mapped");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const auto* sub = app.get_subcommands().front();
  const std::string cmd = sub->get_name();
  try {
    if (cmd == "synth-gen") cmd_synth_gen(f);
    else if (cmd == "pretrain") cmd_pretrain(f);
    else if (cmd == "extract-conv") cmd_extract_conv(f);
    else if (cmd == "train-transfernet") cmd_train_transfernet(f);
    else if (cmd == "graft") cmd_graft(f);
    else if (cmd == "finetune") cmd_finetune(f);
    else if (cmd == "describe") cmd_describe(f);
    else if (cmd == "train-svm") cmd_train_svm(f);
    else if (cmd == "evaluate") cmd_evaluate(f);
    else if (cmd == "heatmap") cmd_heatmap(f);
    else if (cmd == "shuffle-demo") cmd_shuffle_demo(f);
    else if (cmd == "gradcheck") return cmd_gradcheck(f);
  } catch (const Error& e) {
    std::cerr << "s2ica " << cmd << ": " << e.what() << '\n';
    std::cout << json{{"command", cmd}, {"status", "error"}, {"kind", to_string(e.kind())}, {"message", e.what()}}.dump()
              << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "s2ica " << cmd << ": " << e.what() << '\n';
    std::cout << json{{"command", cmd}, {"status", "error"}, {"kind", "internal"}, {"message", e.what()}}.dump()
              << std::endl;
    return 1;
  }
  return 0;
}
