#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>

#include "s2ica/synth.hpp"

using namespace s2ica;
namespace fs = std::filesystem;

namespace {

SynthConfig small_config() {
  SynthConfig cfg;
  cfg.train_per_class = 6;
  cfg.test_per_class = 3;
  cfg.seed = 17;
  return cfg;
}

Index quadrant_of(const Box& b, Index canvas) {
  const Index half = canvas / 2;
  return (b.y >= half ? 2 : 0) + (b.x >= half ? 1 : 0);
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("s2ica_" + name + "_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Synth, DatasetCountsAndLabels) {
  const auto ds = generate_dataset(small_config());
  ASSERT_EQ(ds.class_names.size(), 4u);
  EXPECT_EQ(ds.class_names[0], "disk-square-cross");
  EXPECT_EQ(ds.train.size(), 24u);
  EXPECT_EQ(ds.test.size(), 12u);
  for (Index c = 0; c < 4; ++c) {
    EXPECT_EQ(std::count_if(ds.train.begin(), ds.train.end(), [&](const auto& i) { return i.label == c; }), 6);
  }
}

TEST(Synth, SameSeedSameImages) {
  const auto a = generate_dataset(small_config());
  const auto b = generate_dataset(small_config());
  for (std::size_t i = 0; i < a.train.size(); ++i) EXPECT_EQ(a.train[i].image, b.train[i].image);
  auto other = small_config();
  other.seed = 18;
  EXPECT_FALSE(generate_dataset(other).train[0].image == a.train[0].image);
}

TEST(Synth, ClassContentAndNoOverlap) {
  const auto cfg = small_config();
  const auto ds = generate_dataset(cfg);
  for (const auto* split : {&ds.train, &ds.test}) {
    for (const auto& item : *split) {
      EXPECT_EQ(item.glyphs, cfg.classes[std::size_t(item.label)]);
      for (std::size_t i = 0; i < item.boxes.size(); ++i)
        for (std::size_t j = 0; j < i; ++j) EXPECT_FALSE(item.boxes[i].overlaps(item.boxes[j]));
      EXPECT_GE(item.image.data.minCoeff(), 0.0f);
      EXPECT_LE(item.image.data.maxCoeff(), 1.0f);
    }
  }
}

TEST(Synth, LayoutStressUsesOppositeQuadrant) {
  const auto cfg = small_config();
  const auto ds = generate_dataset(cfg);
  for (const auto& item : ds.train)
    for (std::size_t k = 0; k < item.boxes.size(); ++k)
      EXPECT_EQ(quadrant_of(item.boxes[k], cfg.canvas), (item.label + Index(k)) % 4);
  for (const auto& item : ds.test)
    for (std::size_t k = 0; k < item.boxes.size(); ++k)
      EXPECT_EQ(quadrant_of(item.boxes[k], cfg.canvas), 3 - (item.label + Index(k)) % 4);
}

TEST(Synth, StressKeepsContentOfTheSameStream) {
  const auto cfg = small_config();
  const auto plain = generate_scene(cfg, 2, 99, false);
  const auto stressed = generate_scene(cfg, 2, 99, true);
  ASSERT_EQ(plain.boxes.size(), stressed.boxes.size());
  for (std::size_t k = 0; k < plain.boxes.size(); ++k) EXPECT_EQ(plain.boxes[k].size, stressed.boxes[k].size);
}

TEST(Synth, OversizedGlyphIsGenerationError) {
  auto cfg = small_config();
  cfg.base_glyph = 60;
  EXPECT_THROW(generate_dataset(cfg), GenerationError);
}

TEST(Synth, InvalidConfigIsConfigurationError) {
  auto dup = small_config();
  dup.classes = {{Glyph::disk, Glyph::ring}, {Glyph::ring, Glyph::disk}};
  EXPECT_THROW(dup.validate(), ConfigurationError);
  auto scale = small_config();
  scale.scale_min = 2;
  EXPECT_THROW(scale.validate(), ConfigurationError);
  EXPECT_THROW(glyph_from_string("hexagon"), ConfigurationError);
  for (int g = 0; g < kGlyphCount; ++g) EXPECT_EQ(glyph_from_string(to_string(Glyph(g))), Glyph(g));
}

TEST(Synth, SourceSetIsOneGlyphPerImage) {
  const auto src = generate_source_set(3, 32, 0.05, 4);
  ASSERT_EQ(src.size(), std::size_t(3 * kGlyphCount));
  for (const auto& item : src) {
    EXPECT_EQ(item.image.height, 32);
    ASSERT_EQ(item.glyphs.size(), 1u);
    EXPECT_EQ(Index(item.glyphs[0]), item.label);
  }
}

TEST(Synth, SplitRoundTripsThroughDisk) {
  const auto dir = scratch_dir("split");
  const auto ds = generate_dataset(small_config());
  save_split(dir, "train", ds.train, ds.class_names);
  std::vector<std::string> names;
  const auto back = load_split(dir, "train", &names);
  ASSERT_EQ(back.size(), ds.train.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].image, ds.train[i].image);
    EXPECT_EQ(back[i].label, ds.train[i].label);
  }
  EXPECT_EQ(names, ds.class_names);

  // Without a manifest the class directories define the labels.
  fs::remove(dir / "train.txt");
  const auto by_dir = load_split(dir, "train", &names);
  EXPECT_EQ(by_dir.size(), ds.train.size());
  EXPECT_TRUE(std::is_sorted(names.begin(), names.end()));
  fs::remove_all(dir);
}
