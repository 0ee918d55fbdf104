#include "s2ica/descriptor.hpp"

#include <cmath>

namespace s2ica {

std::string to_string(Pooling p) { return p == Pooling::max ? "max" : "mean"; }

Pooling pooling_from_string(const std::string& name) {
  if (name == "max") return Pooling::max;
  if (name == "mean") return Pooling::mean;
  throw ConfigurationError("unknown pooling '" + name + "' (expected max or mean)");
}

namespace {

/// Matches the image to the network's input channel count.
Image fit_channels(const Image& image, Index channels) {
  if (image.channels == channels) return image;
  if (channels == 1) return to_grayscale(image);
  throw DimensionError("network expects " + std::to_string(channels) + " channels, image has " +
                       std::to_string(image.channels));
}

}  // namespace

FeatureVector patch_feature(const Net& net, const Image& patch) {
  const auto acts = net.last_conv_activations(patch.to_feature_map());
  FeatureVector out = FeatureVector::Constant(acts.channels(), -std::numeric_limits<float>::infinity());
  for (Index y = 0; y < acts.height(); ++y)
    for (Index x = 0; x < acts.width(); ++x)
      for (Index c = 0; c < acts.channels(); ++c) out[c] = std::max(out[c], acts(y, x, c, 0));
  return out;
}

FeatureVector pool_patches(std::span<const FeatureVector> features, Pooling pooling) {
  if (features.empty()) throw EmptyInputError("cannot pool an empty list of features");
  FeatureVector out = features.front();
  for (std::size_t i = 1; i < features.size(); ++i) {
    if (features[i].size() != out.size()) {
      throw DimensionError("feature " + std::to_string(i) + " has length " + std::to_string(features[i].size()) +
                           ", expected " + std::to_string(out.size()));
    }
    if (pooling == Pooling::max) {
      out = out.cwiseMax(features[i]);
    } else {
      out += features[i];
    }
  }
  if (pooling == Pooling::mean) out /= float(features.size());
  return out;
}

ScaleFeatures image_features(const Net& net, const Image& image, const PyramidSpec& pyramid, const PatchSpec& patch) {
  const auto input = net.spec().input;
  if (patch.side != input.height || patch.side != input.width) {
    throw DimensionError("patch side " + std::to_string(patch.side) + " does not match the network input " +
                         std::to_string(input.height) + "x" + std::to_string(input.width));
  }
  const Image fitted = fit_channels(image, input.channels);
  ScaleFeatures out;
  for (const auto& level : build_pyramid(fitted, pyramid)) {
    std::vector<FeatureVector> per_patch;
    for (const auto& p : extract_patches(level, patch)) per_patch.push_back(patch_feature(net, p.image));
    out.push_back(std::move(per_patch));
  }
  return out;
}

FeatureVector pool_scales(const ScaleFeatures& features, Pooling pooling) {
  std::vector<FeatureVector> per_scale;
  for (const auto& s : features) per_scale.push_back(pool_patches(s, pooling));
  return pool_patches(per_scale, pooling);
}

FeatureVector assemble_descriptor(const FeatureVector& w, const FeatureVector& w_su) {
  FeatureVector out(w.size() + w_su.size());
  out << w, w_su;
  return out;
}

FeatureVector describe_image(const Image& image, const Net& net_w, const Net* net_su, const DescriptorConfig& cfg) {
  const auto w = pool_scales(image_features(net_w, image, cfg.pyramid, cfg.patch), cfg.pooling);
  if (!net_su) return w;
  return assemble_descriptor(w, pool_scales(image_features(*net_su, image, cfg.pyramid, cfg.patch), cfg.pooling));
}

ContributionMap contribution_map(const Image& image, const Net& net_w, const Net* net_su, const SvmModel& svm,
                                 Index true_class, const DescriptorConfig& cfg) {
  if (!svm.trained()) throw StateError("contribution map needs a trained SVM");
  if (true_class < 0 || true_class >= svm.classes()) {
    throw LabelError("class " + std::to_string(true_class) + " unknown to the SVM");
  }
  const Image fitted = fit_channels(image, net_w.spec().input.channels);
  const Image base = resize(fitted, cfg.pyramid.base > 0 ? cfg.pyramid.base : fitted.smaller_dim());
  const auto [rows, cols] = patch_grid(base, cfg.patch);
  const auto patches = extract_patches(base, cfg.patch);

  ContributionMap map;
  map.scores.resize(rows, cols);
  for (const auto& p : patches) {
    FeatureVector d = patch_feature(net_w, p.image);
    if (net_su) d = assemble_descriptor(d, patch_feature(*net_su, p.image));
    map.scores(p.row, p.col) = predict(svm, d).scores[true_class];
  }

  const float lo = map.scores.minCoeff(), hi = map.scores.maxCoeff();
  Eigen::MatrixXf normalized =
      hi > lo ? Eigen::MatrixXf((map.scores.array() - lo) / (hi - lo)) : Eigen::MatrixXf::Constant(rows, cols, 0.5f);
  Eigen::ArrayXf sum = Eigen::ArrayXf::Zero(base.height * base.width);
  Eigen::ArrayXf count = Eigen::ArrayXf::Zero(base.height * base.width);
  for (const auto& p : patches) {
    for (Index y = p.y; y < std::min(base.height, p.y + cfg.patch.side); ++y)
      for (Index x = p.x; x < std::min(base.width, p.x + cfg.patch.side); ++x) {
        sum[y * base.width + x] += normalized(p.row, p.col);
        count[y * base.width + x] += 1;
      }
  }
  map.heat = Image(base.height, base.width, 1);
  map.heat.data = (count > 0).select(sum / count.max(1.0f), 0.0f);
  quantize_8bit(map.heat);
  return map;
}

}  // namespace s2ica
