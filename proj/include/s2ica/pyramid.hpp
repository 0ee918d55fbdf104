#pragma once

#include <vector>

#include "s2ica/image.hpp"

namespace s2ica {

/// Resizing each image to several smaller-dimension targets, with no
/// smoothing between levels.
struct PyramidSpec {
  /// Smaller image dimension D of the middle level; 0 means "use the
  /// image's own smaller dimension".
  Index base = 0;
  std::vector<double> scales{0.75, 1.0, 1.25};

  void validate() const;
  /// floor(scale * D) for each scale.
  std::vector<Index> targets(Index image_smaller_dim) const;
};

struct PatchSpec {
  Index side = 32;
  Index stride = 8;

  void validate() const;
  static PatchSpec full_scale() { return {224, 32}; }
};

struct Patch {
  Image image;
  /// Position in the patch grid.
  Index row = 0, col = 0;
  /// Top-left pixel in the source image.
  Index y = 0, x = 0;
};

/// Bilinear resize (sample positions aligned at the corners, so affine
/// images stay affine) to a smaller dimension of `target`, aspect preserved
/// with the other extent floored.
Image resize(const Image& image, Index target);

/// Bilinear resize to explicit extents.
Image resize_to(const Image& image, Index height, Index width);

std::vector<Image> build_pyramid(const Image& image, const PyramidSpec& spec);

/// Patches per axis: floor((extent - side) / stride) + 1.
Index patch_count(Index extent, Index side, Index stride);

/// Row-major sliding-window patches. An image smaller than the patch on
/// some axis yields one patch, center-cropped and edge-replicated to size.
std::vector<Patch> extract_patches(const Image& image, const PatchSpec& spec);

/// Grid extents (rows, cols) that extract_patches produces.
std::pair<Index, Index> patch_grid(const Image& image, const PatchSpec& spec);

}  // namespace s2ica
