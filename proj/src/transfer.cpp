#include "s2ica/transfer.hpp"

namespace s2ica {

NetworkSpec TransferNetSpec::network_spec(Index fan_in) const {
  if (hidden_width < 1) throw SpecificationError("TransferNet hidden width must be positive");
  if (classes < 2) throw SpecificationError("TransferNet needs at least two classes");
  NetworkSpec spec{{1, 1, fan_in}, {}, Profile::custom};
  for (Index i = 0; i < hidden_layers; ++i) spec.layers.push_back(FcSpec{hidden_width, true});
  spec.layers.push_back(FcSpec{classes, false});
  return spec;
}

Net pretrain(const NetworkSpec& spec, std::span<const FeatureMap<float>> source, std::span<const Index> labels,
             const TrainConfig& cfg, const InitConfig& init, const EpochCallback& on_epoch, TrainReport* report) {
  Net net = Net::build(spec, init, "base");
  auto r = train(net, source, labels, cfg, on_epoch);
  if (report) *report = std::move(r);
  return net;
}

std::vector<FeatureVector> extract_conv_features(const Net& net, std::span<const FeatureMap<float>> patches) {
  std::vector<FeatureVector> out;
  out.reserve(patches.size());
  for (const auto& p : patches) out.push_back(net.last_conv_activations(p).data());
  return out;
}

FeatureMap<float> as_feature_map(const FeatureVector& v) {
  FeatureMap<float> m(1, 1, v.size(), 1);
  m.data() = v;
  return m;
}

Net train_transfernet(std::span<const FeatureVector> features, std::span<const Index> labels,
                      const TransferNetSpec& spec, const TrainConfig& cfg, const InitConfig& init,
                      const EpochCallback& on_epoch, TrainReport* report) {
  if (features.size() != labels.size()) throw DimensionError("features and labels differ in count");
  if (features.empty()) throw EmptyInputError("no features to train the TransferNet on");
  const Index fan_in = features.front().size();
  for (Index l : labels) {
    if (l < 0 || l >= spec.classes) {
      throw LabelError("class index " + std::to_string(l) + " outside [0, " + std::to_string(spec.classes) + ")");
    }
  }
  std::vector<FeatureMap<float>> inputs;
  inputs.reserve(features.size());
  for (const auto& f : features) {
    if (f.size() != fan_in) throw DimensionError("feature vectors differ in length");
    inputs.push_back(as_feature_map(f));
  }
  Net net = Net::build(spec.network_spec(fan_in), init, "transfernet");
  auto r = train<float>(net, inputs, labels, cfg, on_epoch);
  if (report) *report = std::move(r);
  return net;
}

FeatureVector transfernet_forward(const Net& transfernet, const FeatureVector& features) {
  return transfernet.predict_logits(as_feature_map(features));
}

void copy_params(const Net& from, Net& to) {
  auto src = from.params();
  auto dst = to.params();
  if (src.size() != dst.size()) throw DimensionError("parameter lists differ in length");
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i]->shape() != dst[i]->shape()) throw DimensionError("parameter shapes differ");
    *dst[i] = *src[i];
  }
}

Net graft(const Net& base, const Net& transfernet) {
  const NetworkSpec stack = base.spec().conv_stack();
  const Index volume = stack.output_shapes().back().volume();
  const auto& tspec = transfernet.spec();
  if (tspec.input.volume() != volume) {
    throw DimensionError("TransferNet fan-in " + std::to_string(tspec.input.volume()) +
                         " differs from the last-conv volume " + std::to_string(volume));
  }
  NetworkSpec combined = stack;
  combined.profile = base.spec().profile;
  for (const auto& l : tspec.layers) {
    if (!std::holds_alternative<FcSpec>(l)) throw SpecificationError("TransferNet must be fully connected only");
    combined.layers.push_back(l);
  }
  Net out(combined, "grafted");
  auto dst = out.params();
  std::size_t k = 0;
  for (std::size_t i = 0; i < stack.layers.size(); ++i)
    for (const auto* p : layer_params(base.layers()[i])) *dst[k++] = *p;
  for (const auto* p : transfernet.params()) *dst[k++] = *p;
  return out;
}

Net finetune(const Net& combined, std::span<const FeatureMap<float>> patches, std::span<const Index> labels,
             const TrainConfig& cfg, bool with_su, const SuSpec& su, const EpochCallback& on_epoch,
             TrainReport* report) {
  NetworkSpec spec = with_su ? combined.spec().with_su(su) : combined.spec().without_su();
  Net net(spec, with_su ? "W_su" : "W");
  copy_params(combined, net);
  auto r = train(net, patches, labels, cfg, on_epoch);
  if (report) *report = std::move(r);
  return net;
}

}  // namespace s2ica
