#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "s2ica/image.hpp"

namespace s2ica {

// Glyph-world: scenes made of a few simple shapes whose identity defines the
// class while their positions and sizes vary.

enum class Glyph { disk, square, cross, triangle, ring };

constexpr int kGlyphCount = 5;
std::string to_string(Glyph g);
Glyph glyph_from_string(const std::string& name);

/// Axis-aligned box, half-open.
struct Box {
  Index y = 0, x = 0, size = 0;
  bool overlaps(const Box& o) const {
    return y < o.y + o.size && o.y < y + size && x < o.x + o.size && o.x < x + size;
  }
};

/// Draws `glyph` inside `box` with the given intensity (max-composited).
void draw_glyph(Image& image, Glyph glyph, const Box& box, float intensity);

/// Placement prior. quadrant: slot k of class c lands in quadrant
/// (c + k) mod 4; layout-stress uses the diagonally opposite quadrant.
/// free: anywhere on the canvas.
enum class Layout { quadrant, free };

struct SynthConfig {
  Index canvas = 96;
  std::vector<std::vector<Glyph>> classes = default_classes();
  Index train_per_class = 50;
  Index test_per_class = 25;
  double scale_min = 0.5;
  double scale_max = 1.0;
  Index base_glyph = 24;
  double intensity_min = 0.4;
  double intensity_max = 1.0;
  double noise_std = 0.05;
  std::uint64_t seed = 0;
  Layout layout = Layout::quadrant;
  /// Generate the test split from the layout-stress prior.
  bool layout_stress_test = true;
  Index max_attempts = 100;

  static std::vector<std::vector<Glyph>> default_classes();
  void validate() const;
};

struct LabeledImage {
  Image image;
  Index label = 0;
  std::string path;  // relative path inside a dataset directory
  std::vector<Box> boxes;
  std::vector<Glyph> glyphs;
};

struct SceneDataset {
  std::vector<std::string> class_names;
  std::vector<LabeledImage> train;
  std::vector<LabeledImage> test;
};

/// One scene of class `label`; deterministic in (cfg.seed, stream).
LabeledImage generate_scene(const SynthConfig& cfg, Index label, std::uint64_t stream, bool layout_stress);

SceneDataset generate_dataset(const SynthConfig& cfg);

/// Single-glyph images of side `side` labelled by glyph; the large-scale
/// source task the networks are first trained on.
std::vector<LabeledImage> generate_source_set(Index per_glyph, Index side, double noise_std, std::uint64_t seed);

std::string class_name(const std::vector<Glyph>& glyphs);

/// Writes root/<split>/<class>/img_NNNN.pgm plus a manifest root/<split>.txt
/// of "relative/path class_index" lines.
void save_split(const std::filesystem::path& root, const std::string& split, const std::vector<LabeledImage>& items,
                const std::vector<std::string>& class_names);

/// Reads a split from its manifest if present, else from the class
/// directories (sorted by name, index = position).
std::vector<LabeledImage> load_split(const std::filesystem::path& root, const std::string& split,
                                     std::vector<std::string>* class_names = nullptr);

}  // namespace s2ica
