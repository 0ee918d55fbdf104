#pragma once

#include <functional>
#include <string>
#include <vector>

#include "s2ica/descriptor.hpp"
#include "s2ica/synth.hpp"

namespace s2ica {

// End-to-end glyph-world run: pretrain on single glyphs, adapt to scene
// patches through a TransferNet, fine-tune with and without the SU layer,
// then classify pooled descriptors with a linear SVM.

struct ExperimentConfig {
  SynthConfig synth;
  Index source_per_glyph = 100;
  /// Base-scale training patches sampled per scene image.
  Index patches_per_image = 4;
  Index hidden_width = 64;
  TrainConfig pretrain;
  TrainConfig transfer;
  TrainConfig finetune;
  SuSpec su{4, 0.5, true};
  DescriptorConfig descriptor;
  SvmConfig svm;
  std::uint64_t seed = 0;
  Index threads = 1;

  /// Defaults tuned for the toy profile; every stage seed derives from `seed`.
  static ExperimentConfig toy(std::uint64_t seed);
  void validate() const;
};

/// Per-image features of both networks, cached so descriptor variants can
/// be pooled without another forward pass.
struct ImageFeatures {
  ScaleFeatures w;
  ScaleFeatures w_su;
  Index label = 0;
};

struct ExperimentArtifacts {
  SceneDataset data;
  Net base;
  Net transfernet;
  Net w;
  Net w_su;
  TrainReport pretrain_report;
  TrainReport transfer_report;
  TrainReport finetune_w_report;
  TrainReport finetune_su_report;
  /// Base-scale patches the TransferNet and both fine-tunes were trained on.
  std::vector<FeatureMap<float>> patches;
  std::vector<Index> patch_labels;
  std::vector<ImageFeatures> train;
  std::vector<ImageFeatures> test;
};

/// Samples `per_image` base-scale patches of each scene, labelled with the
/// scene class.
void sample_patches(const std::vector<LabeledImage>& images, const PatchSpec& patch, Index per_image,
                    std::uint64_t seed, std::vector<FeatureMap<float>>& patches, std::vector<Index>& labels);

using ProgressFn = std::function<void(const std::string&)>;

ExperimentArtifacts run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = {});

struct DescriptorVariant {
  bool use_su = true;
  bool pyramid = true;
  Pooling pooling = Pooling::max;
};

/// Pools cached features into a descriptor. Without the pyramid only the
/// scale closest to 1 is used.
FeatureVector variant_descriptor(const ImageFeatures& f, const std::vector<double>& scales,
                                 const DescriptorVariant& v);

/// Trains an SVM on the train descriptors of a variant, returns test accuracy.
double evaluate_variant(const ExperimentArtifacts& a, const ExperimentConfig& cfg, const DescriptorVariant& v);

}  // namespace s2ica
