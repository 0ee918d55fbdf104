#include "s2ica/pyramid.hpp"

#include <cmath>

namespace s2ica {

void PyramidSpec::validate() const {
  if (base < 0) throw ConfigurationError("pyramid base dimension must be non-negative");
  if (scales.empty()) throw ConfigurationError("pyramid needs at least one scale");
  for (double s : scales) {
    if (!(s > 0)) throw ConfigurationError("pyramid scales must be positive");
  }
}

std::vector<Index> PyramidSpec::targets(Index image_smaller_dim) const {
  validate();
  const Index d = base > 0 ? base : image_smaller_dim;
  std::vector<Index> out;
  for (double s : scales) {
    // The epsilon keeps exact products such as 0.75 * 64 from flooring low.
    out.push_back(std::max<Index>(1, Index(std::floor(s * double(d) + 1e-9))));
  }
  return out;
}

void PatchSpec::validate() const {
  if (side < 1 || stride < 1) throw ConfigurationError("patch side and stride must be positive");
  if (stride > side) throw ConfigurationError("patch stride must not exceed the patch side");
}

Image resize_to(const Image& image, Index height, Index width) {
  if (image.empty() || image.height < 1 || image.width < 1) throw DimensionError("cannot resize an empty image");
  if (height < 1 || width < 1) throw DimensionError("resize target must be positive");
  Image out(height, width, image.channels);
  const double sy = height > 1 ? double(image.height - 1) / double(height - 1) : 0.0;
  const double sx = width > 1 ? double(image.width - 1) / double(width - 1) : 0.0;
  for (Index y = 0; y < height; ++y) {
    const double fy = double(y) * sy;
    const Index y0 = std::min<Index>(Index(std::floor(fy)), image.height - 1);
    const Index y1 = std::min<Index>(y0 + 1, image.height - 1);
    const double wy = fy - double(y0);
    for (Index x = 0; x < width; ++x) {
      const double fx = double(x) * sx;
      const Index x0 = std::min<Index>(Index(std::floor(fx)), image.width - 1);
      const Index x1 = std::min<Index>(x0 + 1, image.width - 1);
      const double wx = fx - double(x0);
      for (Index c = 0; c < image.channels; ++c) {
        const double top = (1 - wx) * image.at(y0, x0, c) + wx * image.at(y0, x1, c);
        const double bottom = (1 - wx) * image.at(y1, x0, c) + wx * image.at(y1, x1, c);
        out.at(y, x, c) = float((1 - wy) * top + wy * bottom);
      }
    }
  }
  return out;
}

Image resize(const Image& image, Index target) {
  if (target < 1) throw DimensionError("resize target must be positive");
  if (image.empty()) throw DimensionError("cannot resize an empty image");
  if (image.height <= image.width) {
    const auto w = std::max<Index>(1, Index(std::floor(double(image.width) * double(target) / double(image.height))));
    return resize_to(image, target, w);
  }
  const auto h = std::max<Index>(1, Index(std::floor(double(image.height) * double(target) / double(image.width))));
  return resize_to(image, h, target);
}

std::vector<Image> build_pyramid(const Image& image, const PyramidSpec& spec) {
  std::vector<Image> out;
  for (Index t : spec.targets(image.smaller_dim())) out.push_back(resize(image, t));
  return out;
}

Index patch_count(Index extent, Index side, Index stride) {
  if (extent < side) return 0;
  return (extent - side) / stride + 1;
}

std::pair<Index, Index> patch_grid(const Image& image, const PatchSpec& spec) {
  spec.validate();
  if (image.height < spec.side || image.width < spec.side) return {1, 1};
  return {patch_count(image.height, spec.side, spec.stride), patch_count(image.width, spec.side, spec.stride)};
}

namespace {

/// Single side x side patch: axes longer than the patch are center-cropped,
/// shorter ones are centered and edge-replicated.
Image fitted_patch(const Image& image, Index side) {
  Image out(side, side, image.channels);
  const Index off_y = (image.height - side) / 2;  // negative when padding
  const Index off_x = (image.width - side) / 2;
  for (Index y = 0; y < side; ++y) {
    const Index sy = std::clamp<Index>(y + off_y, 0, image.height - 1);
    for (Index x = 0; x < side; ++x) {
      const Index sx = std::clamp<Index>(x + off_x, 0, image.width - 1);
      for (Index c = 0; c < image.channels; ++c) out.at(y, x, c) = image.at(sy, sx, c);
    }
  }
  return out;
}

}  // namespace

std::vector<Patch> extract_patches(const Image& image, const PatchSpec& spec) {
  spec.validate();
  if (image.empty()) throw DimensionError("cannot extract patches from an empty image");
  if (image.height < spec.side || image.width < spec.side) {
    return {Patch{fitted_patch(image, spec.side), 0, 0, 0, 0}};
  }
  const Index rows = patch_count(image.height, spec.side, spec.stride);
  const Index cols = patch_count(image.width, spec.side, spec.stride);
  std::vector<Patch> out;
  out.reserve(std::size_t(rows * cols));
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) {
      Patch p{Image(spec.side, spec.side, image.channels), r, c, r * spec.stride, c * spec.stride};
      const Index run = spec.side * image.channels;
      for (Index y = 0; y < spec.side; ++y) {
        p.image.data.segment(y * run, run) =
            image.data.segment(((p.y + y) * image.width + p.x) * image.channels, run);
      }
      out.push_back(std::move(p));
    }
  return out;
}

}  // namespace s2ica
