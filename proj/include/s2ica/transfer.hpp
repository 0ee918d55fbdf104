#pragma once

#include <span>
#include <vector>

#include "s2ica/network.hpp"
#include "s2ica/training.hpp"

namespace s2ica {

// Adapting a network trained on a large source task to scene patches:
// pretrain, take last-conv features, train a fully connected TransferNet on
// them, graft it onto the conv stack, then fine-tune end to end with and
// without the SU layer.

using Net = Network<float>;
using FeatureVector = Vec<float>;

/// Three hidden ReLU layers of hidden_width plus a logits layer.
struct TransferNetSpec {
  static constexpr Index hidden_layers = 3;
  Index hidden_width = 4096;
  Index classes = 2;

  NetworkSpec network_spec(Index fan_in) const;
};

Net pretrain(const NetworkSpec& spec, std::span<const FeatureMap<float>> source, std::span<const Index> labels,
             const TrainConfig& cfg, const InitConfig& init, const EpochCallback& on_epoch = {},
             TrainReport* report = nullptr);

/// Flattened ReLU activations at the last convolution, one vector per patch.
std::vector<FeatureVector> extract_conv_features(const Net& net, std::span<const FeatureMap<float>> patches);

FeatureMap<float> as_feature_map(const FeatureVector& v);

Net train_transfernet(std::span<const FeatureVector> features, std::span<const Index> labels,
                      const TransferNetSpec& spec, const TrainConfig& cfg, const InitConfig& init,
                      const EpochCallback& on_epoch = {}, TrainReport* report = nullptr);

/// Logits of the TransferNet for one feature vector.
FeatureVector transfernet_forward(const Net& transfernet, const FeatureVector& features);

/// Base conv stack (through the last convolution) followed by the TransferNet.
Net graft(const Net& base, const Net& transfernet);

/// End-to-end training of a grafted network. with_su places the SU layer
/// after the first sub-sampling layer; the result is tagged "W_su", else "W".
Net finetune(const Net& combined, std::span<const FeatureMap<float>> patches, std::span<const Index> labels,
             const TrainConfig& cfg, bool with_su, const SuSpec& su = {}, const EpochCallback& on_epoch = {},
             TrainReport* report = nullptr);

/// Copies parameters between networks whose parameter lists line up.
void copy_params(const Net& from, Net& to);

}  // namespace s2ica
