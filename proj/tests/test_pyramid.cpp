#include <gtest/gtest.h>

#include "s2ica/pyramid.hpp"
#include "s2ica/random.hpp"

using namespace s2ica;

namespace {

Image affine(Index h, Index w, double a, double b, double c) {
  Image img(h, w);
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x) img.at(y, x) = float(a * double(y) + b * double(x) + c);
  return img;
}

}  // namespace

TEST(Pyramid, TargetsFloorScaledDimension) {
  PyramidSpec spec;
  EXPECT_EQ(spec.targets(64), (std::vector<Index>{48, 64, 80}));
  EXPECT_EQ(spec.targets(90), (std::vector<Index>{67, 90, 112}));
  spec.base = 32;
  EXPECT_EQ(spec.targets(500), (std::vector<Index>{24, 32, 40}));
}

TEST(Pyramid, LevelsHaveTargetSmallerDimension) {
  const auto levels = build_pyramid(affine(40, 60, 0.01, 0.005, 0.1), PyramidSpec{});
  ASSERT_EQ(levels.size(), 3u);
  EXPECT_EQ(levels[0].height, 30);
  EXPECT_EQ(levels[0].width, 45);
  EXPECT_EQ(levels[1].height, 40);
  EXPECT_EQ(levels[1].width, 60);
  EXPECT_EQ(levels[2].height, 50);
  EXPECT_EQ(levels[2].width, 75);
}

TEST(Pyramid, InvalidSpecIsConfigurationError) {
  EXPECT_THROW((PyramidSpec{0, {}}).validate(), ConfigurationError);
  EXPECT_THROW((PyramidSpec{0, {1.0, -0.5}}).validate(), ConfigurationError);
  EXPECT_THROW((PyramidSpec{-1}).validate(), ConfigurationError);
}

TEST(Resize, SameSizeIsIdentity) {
  Rng rng(1);
  Image img(7, 9, 3);
  for (Index i = 0; i < img.data.size(); ++i) img.data[i] = float(rng.uniform(0, 1));
  EXPECT_EQ(resize_to(img, 7, 9), img);
}

TEST(Resize, AffineImagesStayAffine) {
  const double a = 0.02, b = -0.01, c = 0.5;
  const auto out = resize_to(affine(21, 31, a, b, c), 11, 16);
  // Corner-aligned sampling: output (y, x) reads source (2y, 2x).
  for (Index y = 0; y < out.height; ++y)
    for (Index x = 0; x < out.width; ++x) EXPECT_NEAR(out.at(y, x), a * 2.0 * double(y) + b * 2.0 * double(x) + c, 1e-5);
}

TEST(Resize, BilinearMidpoint) {
  Image img(2, 2);
  img.data << 0.0f, 1.0f, 2.0f, 3.0f;
  const auto out = resize_to(img, 3, 3);
  EXPECT_FLOAT_EQ(out.at(1, 1), 1.5f);
  EXPECT_FLOAT_EQ(out.at(0, 1), 0.5f);
  EXPECT_FLOAT_EQ(out.at(2, 2), 3.0f);
}

TEST(Resize, PreservesAspectWithFlooredExtent) {
  const auto out = resize(affine(30, 50, 0, 0, 0), 20);
  EXPECT_EQ(out.height, 20);
  EXPECT_EQ(out.width, 33);
  const auto tall = resize(affine(50, 30, 0, 0, 0), 20);
  EXPECT_EQ(tall.width, 20);
  EXPECT_EQ(tall.height, 33);
  EXPECT_THROW(resize(Image{}, 10), DimensionError);
  EXPECT_THROW(resize(affine(4, 4, 0, 0, 0), 0), DimensionError);
}

TEST(Patches, CountFormula) {
  EXPECT_EQ(patch_count(96, 32, 16), 5);
  EXPECT_EQ(patch_count(100, 32, 16), 5);
  EXPECT_EQ(patch_count(32, 32, 8), 1);
  EXPECT_EQ(patch_count(31, 32, 8), 0);
}

TEST(Patches, GridMatchesWindowOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const Index h = 8 + Index(rng.below(30)), w = 8 + Index(rng.below(30));
    const PatchSpec spec{Index(4 + rng.below(5)), Index(1 + rng.below(4))};
    Image img(h, w);
    for (Index i = 0; i < img.data.size(); ++i) img.data[i] = float(i);
    const auto patches = extract_patches(img, spec);
    const auto [rows, cols] = patch_grid(img, spec);
    ASSERT_EQ(Index(patches.size()), rows * cols);
    for (const auto& p : patches) {
      EXPECT_EQ(p.y, p.row * spec.stride);
      EXPECT_EQ(p.x, p.col * spec.stride);
      for (Index y = 0; y < spec.side; ++y)
        for (Index x = 0; x < spec.side; ++x) ASSERT_EQ(p.image.at(y, x), img.at(p.y + y, p.x + x));
    }
    EXPECT_EQ(patches.back().y + spec.side + spec.stride > h, true);
  }
}

TEST(Patches, SmallImageGivesOneFittedPatch) {
  Image img(3, 6);
  for (Index i = 0; i < img.data.size(); ++i) img.data[i] = float(i);
  const auto patches = extract_patches(img, PatchSpec{4, 2});
  ASSERT_EQ(patches.size(), 1u);
  // Width 6 is center-cropped to columns 1..4; height 3 is padded by edge rows.
  EXPECT_EQ(patches[0].image.at(0, 0), img.at(0, 1));
  EXPECT_EQ(patches[0].image.at(3, 3), img.at(2, 4));
}

TEST(Patches, InvalidSpecIsConfigurationError) {
  EXPECT_THROW((PatchSpec{0, 1}).validate(), ConfigurationError);
  EXPECT_THROW((PatchSpec{8, 9}).validate(), ConfigurationError);
  EXPECT_THROW(extract_patches(Image{}, PatchSpec{4, 2}), DimensionError);
}
