#include <gtest/gtest.h>

#include <algorithm>

#include "s2ica/experiment.hpp"

using namespace s2ica;

namespace {

Image random_image(Index h, Index w, std::uint64_t seed) {
  Rng rng(seed);
  Image img(h, w);
  for (Index i = 0; i < img.data.size(); ++i) img.data[i] = float(rng.uniform(0, 1));
  return img;
}

DescriptorConfig small_config() {
  DescriptorConfig cfg;
  cfg.patch = {32, 16};
  return cfg;
}

FeatureVector vec(std::initializer_list<float> v) {
  FeatureVector out(Index(v.size()));
  Index i = 0;
  for (float x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST(Pooling, MaxAndMeanExamples) {
  const std::vector<FeatureVector> f{vec({1, 5, -2}), vec({3, 0, -4})};
  EXPECT_EQ(pool_patches(f, Pooling::max), vec({3, 5, -2}));
  EXPECT_EQ(pool_patches(f, Pooling::mean), vec({2, 2.5, -3}));
  EXPECT_THROW(pool_patches(std::span<const FeatureVector>{}), EmptyInputError);
  const std::vector<FeatureVector> ragged{vec({1, 2}), vec({1})};
  EXPECT_THROW(pool_patches(ragged), DimensionError);
  EXPECT_EQ(pooling_from_string(to_string(Pooling::mean)), Pooling::mean);
  EXPECT_THROW(pooling_from_string("median"), ConfigurationError);
}

TEST(Pooling, ScalesPoolAfterPatches) {
  const ScaleFeatures f{{vec({1, 0}), vec({0, 4})}, {vec({2, 2})}};
  EXPECT_EQ(pool_scales(f, Pooling::max), vec({2, 4}));
  // Mean of per-scale means: (0.5, 2) and (2, 2).
  EXPECT_EQ(pool_scales(f, Pooling::mean), vec({1.25, 2}));
}

TEST(Descriptor, FixedLengthTwiceChannelCount) {
  const auto w = Network<float>::build(NetworkSpec::toy(4), InitConfig{1});
  const auto su = Network<float>::build(NetworkSpec::toy(4).with_su(SuSpec{}), InitConfig{2});
  const Index v = w.spec().output_shapes()[std::size_t(w.spec().last_conv())].channels;
  for (auto [h, wd] : {std::pair<Index, Index>{48, 48}, {64, 80}, {40, 100}}) {
    const auto d = describe_image(random_image(h, wd, 3), w, &su, small_config());
    EXPECT_EQ(d.size(), 2 * v);
  }
  EXPECT_EQ(describe_image(random_image(48, 48, 3), w, nullptr, small_config()).size(), v);
}

TEST(Descriptor, InvariantToTraversalOrder) {
  const auto net = Network<float>::build(NetworkSpec::toy(4), InitConfig{4});
  auto f = image_features(net, random_image(64, 64, 5), PyramidSpec{}, PatchSpec{32, 16});
  ASSERT_EQ(f.size(), 3u);
  Rng rng(6);
  for (Pooling p : {Pooling::max, Pooling::mean}) {
    const auto reference = pool_scales(f, p);
    auto shuffled = f;
    for (auto& scale : shuffled)
      for (std::size_t i = scale.size(); i > 1; --i) std::swap(scale[i - 1], scale[rng.below(i)]);
    std::reverse(shuffled.begin(), shuffled.end());
    if (p == Pooling::max) {
      EXPECT_EQ(pool_scales(shuffled, p), reference);
    } else {
      EXPECT_LE((pool_scales(shuffled, p) - reference).cwiseAbs().maxCoeff(), 1e-6f);
    }
  }
}

TEST(Descriptor, BitExactAcrossRuns) {
  const auto a = Network<float>::build(NetworkSpec::toy(4), InitConfig{7});
  const auto b = Network<float>::build(NetworkSpec::toy(4), InitConfig{7});
  const auto su = Network<float>::build(NetworkSpec::toy(4).with_su(SuSpec{}), InitConfig{8});
  const auto img = random_image(56, 70, 9);
  EXPECT_EQ(describe_image(img, a, &su, small_config()), describe_image(img, b, &su, small_config()));
}

TEST(Descriptor, ConcatenatesWThenWsu) {
  const auto w = Network<float>::build(NetworkSpec::toy(4), InitConfig{10});
  const auto su = Network<float>::build(NetworkSpec::toy(4).with_su(SuSpec{}), InitConfig{11});
  const auto img = random_image(48, 48, 12);
  const auto d = describe_image(img, w, &su, small_config());
  const auto dw = describe_image(img, w, nullptr, small_config());
  const auto dsu = describe_image(img, su, nullptr, small_config());
  EXPECT_EQ(d, assemble_descriptor(dw, dsu));
  EXPECT_EQ(d.head(dw.size()), dw);
}

TEST(Descriptor, ZeroPatchAndChannelMismatch) {
  const auto net = Network<float>::build(NetworkSpec::toy(4), InitConfig{13});
  EXPECT_TRUE((patch_feature(net, Image(32, 32)).array() == 0.0f).all());
  EXPECT_EQ(patch_feature(net, Image(32, 32)).size(), 16);
  DescriptorConfig wrong = small_config();
  wrong.patch = {24, 8};
  EXPECT_THROW(describe_image(random_image(48, 48, 1), net, nullptr, wrong), DimensionError);
}

TEST(Descriptor, VariantWithoutPyramidUsesUnitScale) {
  ImageFeatures f;
  f.w = {{vec({1, 0})}, {vec({0, 2})}, {vec({5, 5})}};
  f.w_su = {{vec({3, 3})}, {vec({4, 1})}, {vec({0, 0})}};
  const std::vector<double> scales{0.75, 1.0, 1.25};
  EXPECT_EQ(variant_descriptor(f, scales, {false, false, Pooling::max}), vec({0, 2}));
  EXPECT_EQ(variant_descriptor(f, scales, {true, false, Pooling::max}), vec({0, 2, 4, 1}));
  EXPECT_EQ(variant_descriptor(f, scales, {true, true, Pooling::max}), vec({5, 5, 4, 3}));
}

TEST(Contribution, MapFollowsPatchGrid) {
  const auto w = Network<float>::build(NetworkSpec::toy(2), InitConfig{14});
  const auto cfg = small_config();
  std::vector<FeatureVector> x;
  std::vector<Index> y;
  for (int i = 0; i < 6; ++i) {
    x.push_back(describe_image(random_image(64, 64, 20 + i), w, nullptr, cfg));
    y.push_back(i % 2);
  }
  SvmConfig svm_cfg;
  svm_cfg.epochs = 5;
  const auto svm = train_svm(x, y, svm_cfg);
  const auto map = contribution_map(random_image(64, 64, 30), w, nullptr, svm, 1, cfg);
  EXPECT_EQ(map.rows(), 3);
  EXPECT_EQ(map.cols(), 3);
  EXPECT_EQ(map.heat.height, 64);
  EXPECT_EQ(map.heat.width, 64);
  EXPECT_GE(map.heat.data.minCoeff(), 0.0f);
  EXPECT_LE(map.heat.data.maxCoeff(), 1.0f);
  EXPECT_THROW(contribution_map(random_image(64, 64, 30), w, nullptr, svm, 2, cfg), LabelError);
  EXPECT_THROW(contribution_map(random_image(64, 64, 30), w, nullptr, SvmModel{}, 0, cfg), StateError);
}
