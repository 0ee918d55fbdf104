#include "s2ica/experiment.hpp"

#include <cmath>

namespace s2ica {

ExperimentConfig ExperimentConfig::toy(std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.seed = seed;
  cfg.synth.seed = derive_seed(seed, 1);
  cfg.pretrain.epochs = 20;
  cfg.pretrain.learning_rate = 0.01;
  cfg.pretrain.seed = derive_seed(seed, 2);
  cfg.transfer.epochs = 10;
  cfg.transfer.learning_rate = 0.01;
  cfg.transfer.seed = derive_seed(seed, 3);
  cfg.finetune.epochs = 5;
  cfg.finetune.learning_rate = 0.005;
  cfg.finetune.seed = derive_seed(seed, 4);
  // Shuffling is a training-time perturbation here; descriptors read the
  // W_su network unshuffled.
  cfg.su.infer_apply = false;
  cfg.descriptor.patch = {32, 16};
  cfg.svm.C = 100.0;
  cfg.svm.seed = derive_seed(seed, 5);
  return cfg;
}

void ExperimentConfig::validate() const {
  synth.validate();
  pretrain.validate();
  transfer.validate();
  finetune.validate();
  descriptor.pyramid.validate();
  descriptor.patch.validate();
  svm.validate();
  if (source_per_glyph < 1 || patches_per_image < 1 || hidden_width < 1) {
    throw ConfigurationError("source size, patches per image and hidden width must be positive");
  }
  if (threads < 1) throw ConfigurationError("thread count must be positive");
}

void sample_patches(const std::vector<LabeledImage>& images, const PatchSpec& patch, Index per_image,
                    std::uint64_t seed, std::vector<FeatureMap<float>>& patches, std::vector<Index>& labels) {
  for (std::size_t i = 0; i < images.size(); ++i) {
    Rng rng(derive_seed(seed, i));
    const auto all = extract_patches(to_grayscale(images[i].image), patch);
    for (Index k = 0; k < per_image; ++k) {
      patches.push_back(all[rng.below(all.size())].image.to_feature_map());
      labels.push_back(images[i].label);
    }
  }
}

namespace {

void report(const ProgressFn& progress, const std::string& msg) {
  if (progress) progress(msg);
}

std::vector<ImageFeatures> features_of(const std::vector<LabeledImage>& images, const Net& w, const Net& w_su,
                                       const DescriptorConfig& d, Index threads) {
  std::vector<ImageFeatures> out(images.size());
  detail::parallel_for(Index(images.size()), threads, [&](Index i) {
    const auto& img = images[std::size_t(i)];
    out[std::size_t(i)] = {image_features(w, img.image, d.pyramid, d.patch),
                           image_features(w_su, img.image, d.pyramid, d.patch), img.label};
  });
  return out;
}

}  // namespace

ExperimentArtifacts run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  ExperimentArtifacts a;
  a.data = generate_dataset(cfg.synth);
  const Index classes = Index(a.data.class_names.size());
  const Index side = cfg.descriptor.patch.side;

  report(progress, "pretraining on single-glyph source set");
  const auto source = generate_source_set(cfg.source_per_glyph, side, cfg.synth.noise_std, derive_seed(cfg.seed, 6));
  std::vector<FeatureMap<float>> source_x;
  std::vector<Index> source_y;
  for (const auto& s : source) {
    source_x.push_back(s.image.to_feature_map());
    source_y.push_back(s.label);
  }
  TrainConfig pre = cfg.pretrain;
  pre.threads = cfg.threads;
  a.base = pretrain(NetworkSpec::toy(kGlyphCount, side), source_x, source_y, pre, InitConfig{derive_seed(cfg.seed, 7)},
                    {}, &a.pretrain_report);

  report(progress, "training TransferNet on last-conv features");
  std::vector<FeatureMap<float>> patches;
  std::vector<Index> labels;
  sample_patches(a.data.train, cfg.descriptor.patch, cfg.patches_per_image, derive_seed(cfg.seed, 8), patches,
                 labels);
  const auto features = extract_conv_features(a.base, patches);
  TrainConfig tr = cfg.transfer;
  tr.threads = cfg.threads;
  a.transfernet = train_transfernet(features, labels, TransferNetSpec{cfg.hidden_width, classes}, tr,
                                    InitConfig{derive_seed(cfg.seed, 9)}, {}, &a.transfer_report);

  report(progress, "fine-tuning W and W_su");
  const Net combined = graft(a.base, a.transfernet);
  TrainConfig ft = cfg.finetune;
  ft.threads = cfg.threads;
  a.w = finetune(combined, patches, labels, ft, false, {}, {}, &a.finetune_w_report);
  a.w_su = finetune(combined, patches, labels, ft, true, cfg.su, {}, &a.finetune_su_report);

  report(progress, "extracting pyramid patch features");
  a.patches = std::move(patches);
  a.patch_labels = std::move(labels);
  a.train = features_of(a.data.train, a.w, a.w_su, cfg.descriptor, cfg.threads);
  a.test = features_of(a.data.test, a.w, a.w_su, cfg.descriptor, cfg.threads);
  return a;
}

FeatureVector variant_descriptor(const ImageFeatures& f, const std::vector<double>& scales,
                                 const DescriptorVariant& v) {
  auto pool = [&](const ScaleFeatures& s) {
    if (v.pyramid) return pool_scales(s, v.pooling);
    std::size_t best = 0;
    for (std::size_t i = 1; i < scales.size(); ++i) {
      if (std::abs(scales[i] - 1.0) < std::abs(scales[best] - 1.0)) best = i;
    }
    return pool_patches(s.at(best), v.pooling);
  };
  const auto w = pool(f.w);
  return v.use_su ? assemble_descriptor(w, pool(f.w_su)) : w;
}

double evaluate_variant(const ExperimentArtifacts& a, const ExperimentConfig& cfg, const DescriptorVariant& v) {
  auto build = [&](const std::vector<ImageFeatures>& items, std::vector<FeatureVector>& x, std::vector<Index>& y) {
    for (const auto& f : items) {
      x.push_back(variant_descriptor(f, cfg.descriptor.pyramid.scales, v));
      y.push_back(f.label);
    }
  };
  std::vector<FeatureVector> train_x, test_x;
  std::vector<Index> train_y, test_y;
  build(a.train, train_x, train_y);
  build(a.test, test_x, test_y);
  const auto model = train_svm(train_x, train_y, cfg.svm);
  return evaluate(model, test_x, test_y).accuracy;
}

}  // namespace s2ica
