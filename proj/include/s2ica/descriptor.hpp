#pragma once

#include <span>
#include <vector>

#include "s2ica/image.hpp"
#include "s2ica/pyramid.hpp"
#include "s2ica/svm.hpp"
#include "s2ica/transfer.hpp"

namespace s2ica {

enum class Pooling { max, mean };

std::string to_string(Pooling p);
Pooling pooling_from_string(const std::string& name);

struct DescriptorConfig {
  PyramidSpec pyramid;
  PatchSpec patch;
  /// Reduction across patches and across scales. Within a patch the
  /// activations are always max-pooled spatially.
  Pooling pooling = Pooling::max;
};

/// Last-conv ReLU activations of one patch, max-pooled over the spatial
/// grid to one value per channel.
FeatureVector patch_feature(const Net& net, const Image& patch);

/// Elementwise max (or mean) across equal-length vectors.
FeatureVector pool_patches(std::span<const FeatureVector> features, Pooling pooling = Pooling::max);

/// Per-patch features of one network, [scale][patch] in pyramid and
/// row-major patch order.
using ScaleFeatures = std::vector<std::vector<FeatureVector>>;

ScaleFeatures image_features(const Net& net, const Image& image, const PyramidSpec& pyramid, const PatchSpec& patch);

/// Pools each scale over its patches, then the scale vectors together.
FeatureVector pool_scales(const ScaleFeatures& features, Pooling pooling = Pooling::max);

/// W half first, W_su half second.
FeatureVector assemble_descriptor(const FeatureVector& w, const FeatureVector& w_su);

/// Full descriptor of one image. With net_su null only the W half is built.
FeatureVector describe_image(const Image& image, const Net& net_w, const Net* net_su, const DescriptorConfig& cfg);

struct ContributionMap {
  /// True-class score of each base-scale patch, on the patch grid.
  Eigen::MatrixXf scores;
  /// Grayscale rendering at the base-scale image size: each pixel is the
  /// mean normalized score of the patches covering it (brighter = more).
  Image heat;

  Index rows() const { return scores.rows(); }
  Index cols() const { return scores.cols(); }
};

/// Scores every base-scale patch with a descriptor built from that patch
/// alone.
ContributionMap contribution_map(const Image& image, const Net& net_w, const Net* net_su, const SvmModel& svm,
                                 Index true_class, const DescriptorConfig& cfg);

}  // namespace s2ica
