#pragma once

#include <filesystem>
#include <string>

#include "s2ica/tensor.hpp"

namespace s2ica {

/// Grayscale or RGB image with samples in [0, 1], stored (height, width,
/// channel) row-major.
struct Image {
  Index height = 0;
  Index width = 0;
  Index channels = 1;
  Eigen::ArrayXf data;

  Image() = default;
  Image(Index height_, Index width_, Index channels_ = 1, float fill = 0.0f)
      : height(height_), width(width_), channels(channels_), data(Eigen::ArrayXf::Constant(height_ * width_ * channels_, fill)) {
    if (height_ < 1 || width_ < 1 || (channels_ != 1 && channels_ != 3)) {
      throw DimensionError("image needs positive extents and 1 or 3 channels");
    }
  }

  Index smaller_dim() const { return std::min(height, width); }
  bool empty() const { return data.size() == 0; }

  float& at(Index y, Index x, Index c = 0) { return data[(y * width + x) * channels + c]; }
  float at(Index y, Index x, Index c = 0) const { return data[(y * width + x) * channels + c]; }

  /// Single-sample (h, w, c, 1) view for the networks.
  FeatureMap<float> to_feature_map() const {
    FeatureMap<float> m(height, width, channels, 1);
    m.data() = data.matrix();
    return m;
  }

  static Image from_feature_map(const FeatureMap<float>& m, Index sample = 0) {
    Image img(m.height(), m.width(), m.channels());
    img.data = m.sample(sample).array();
    return img;
  }

  bool operator==(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels && (data == o.data).all();
  }
};

/// Binary Netpbm: P5 (grayscale) or P6 (RGB), maxval 255. Comments are
/// accepted anywhere whitespace is.
Image decode_netpbm(const std::string& bytes);
std::string encode_netpbm(const Image& image);

Image load_image(const std::filesystem::path& path);
void save_image(const std::filesystem::path& path, const Image& image);

/// Luma 0.299 R + 0.587 G + 0.114 B; grayscale input is returned unchanged.
Image to_grayscale(const Image& image);

/// Rounds samples to the nearest 8-bit level so an image survives a save/load.
void quantize_8bit(Image& image);

}  // namespace s2ica
