#include "s2ica/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "s2ica/model_io.hpp"
#include "s2ica/random.hpp"

namespace s2ica {

namespace fs = std::filesystem;

std::string to_string(Glyph g) {
  switch (g) {
    case Glyph::disk: return "disk";
    case Glyph::square: return "square";
    case Glyph::cross: return "cross";
    case Glyph::triangle: return "triangle";
    case Glyph::ring: return "ring";
  }
  return "disk";
}

Glyph glyph_from_string(const std::string& name) {
  for (int g = 0; g < kGlyphCount; ++g) {
    if (to_string(Glyph(g)) == name) return Glyph(g);
  }
  throw ConfigurationError("unknown glyph '" + name + "'");
}

void draw_glyph(Image& image, Glyph glyph, const Box& box, float intensity) {
  const double r = double(box.size) / 2.0;
  const double cy = double(box.y) + r, cx = double(box.x) + r;
  for (Index y = std::max<Index>(0, box.y); y < std::min(image.height, box.y + box.size); ++y) {
    for (Index x = std::max<Index>(0, box.x); x < std::min(image.width, box.x + box.size); ++x) {
      const double dy = double(y) + 0.5 - cy, dx = double(x) + 0.5 - cx;
      const double d = std::hypot(dy, dx);
      bool on = false;
      switch (glyph) {
        case Glyph::disk: on = d <= 0.95 * r; break;
        case Glyph::square: on = std::abs(dy) <= 0.8 * r && std::abs(dx) <= 0.8 * r; break;
        case Glyph::cross: on = std::abs(dx) <= r / 3.0 || std::abs(dy) <= r / 3.0; break;
        case Glyph::triangle: {
          const double u = (double(y) + 0.5 - double(box.y)) / double(box.size);  // 0 at apex
          on = u >= 0.05 && u <= 0.95 && std::abs(dx) <= 0.5 * u * double(box.size);
          break;
        }
        case Glyph::ring: on = d <= 0.95 * r && d >= 0.55 * r; break;
      }
      if (on) {
        for (Index c = 0; c < image.channels; ++c) image.at(y, x, c) = std::max(image.at(y, x, c), intensity);
      }
    }
  }
}

std::vector<std::vector<Glyph>> SynthConfig::default_classes() {
  using G = Glyph;
  return {
      {G::disk, G::square, G::cross},
      {G::disk, G::triangle, G::ring},
      {G::square, G::triangle, G::cross},
      {G::cross, G::ring, G::triangle},
  };
}

void SynthConfig::validate() const {
  if (canvas < 8) throw ConfigurationError("canvas must be at least 8 pixels");
  if (classes.size() < 2) throw ConfigurationError("need at least two classes");
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i].empty()) throw ConfigurationError("class " + std::to_string(i) + " has no glyphs");
    auto a = classes[i];
    std::sort(a.begin(), a.end());
    for (std::size_t j = 0; j < i; ++j) {
      auto b = classes[j];
      std::sort(b.begin(), b.end());
      if (a == b) throw ConfigurationError("classes " + std::to_string(j) + " and " + std::to_string(i) +
                                           " have the same glyph multiset");
    }
  }
  if (train_per_class < 0 || test_per_class < 0) throw ConfigurationError("instance counts must be non-negative");
  if (!(scale_min > 0 && scale_min <= scale_max)) throw ConfigurationError("invalid glyph scale range");
  if (!(intensity_min >= 0 && intensity_min <= intensity_max && intensity_max <= 1)) {
    throw ConfigurationError("invalid intensity range");
  }
  if (!(noise_std >= 0)) throw ConfigurationError("noise std must be non-negative");
  if (base_glyph < 1 || max_attempts < 1) throw ConfigurationError("invalid glyph size or attempt budget");
}

std::string class_name(const std::vector<Glyph>& glyphs) {
  std::string name;
  for (std::size_t i = 0; i < glyphs.size(); ++i) name += (i ? "-" : "") + to_string(glyphs[i]);
  return name;
}

namespace {

void add_noise(Image& img, double stddev, Rng& rng) {
  if (stddev > 0) {
    for (Index i = 0; i < img.data.size(); ++i) img.data[i] += float(rng.normal(0.0, stddev));
  }
  quantize_8bit(img);
}

}  // namespace

LabeledImage generate_scene(const SynthConfig& cfg, Index label, std::uint64_t stream, bool layout_stress) {
  const auto& glyphs = cfg.classes.at(std::size_t(label));
  Rng rng(derive_seed(cfg.seed, stream));
  LabeledImage out{Image(cfg.canvas, cfg.canvas, 1), label, {}, {}, {}};
  const Index half = cfg.canvas / 2;
  for (std::size_t k = 0; k < glyphs.size(); ++k) {
    const auto size = std::max<Index>(
        2, Index(std::lround(rng.uniform(cfg.scale_min, cfg.scale_max) * double(cfg.base_glyph))));
    const float intensity = float(rng.uniform(cfg.intensity_min, cfg.intensity_max));
    Index y0 = 0, x0 = 0, extent = cfg.canvas;
    if (cfg.layout == Layout::quadrant) {
      Index q = (label + Index(k)) % 4;
      if (layout_stress) q = 3 - q;
      y0 = (q / 2) * half;
      x0 = (q % 2) * half;
      extent = half;
    }
    if (size > extent) {
      throw GenerationError("glyph of size " + std::to_string(size) + " cannot fit its " + std::to_string(extent) +
                            "-pixel placement region; use a smaller scale range");
    }
    bool placed = false;
    for (Index attempt = 0; attempt < cfg.max_attempts && !placed; ++attempt) {
      const Box box{y0 + Index(rng.below(std::uint64_t(extent - size + 1))),
                    x0 + Index(rng.below(std::uint64_t(extent - size + 1))), size};
      if (std::none_of(out.boxes.begin(), out.boxes.end(), [&](const Box& b) { return b.overlaps(box); })) {
        out.boxes.push_back(box);
        out.glyphs.push_back(glyphs[k]);
        draw_glyph(out.image, glyphs[k], box, intensity);
        placed = true;
      }
    }
    if (!placed) {
      throw GenerationError("could not place glyph " + to_string(glyphs[k]) + " without overlap after " +
                            std::to_string(cfg.max_attempts) + " attempts; use a smaller scale range");
    }
  }
  add_noise(out.image, cfg.noise_std, rng);
  return out;
}

SceneDataset generate_dataset(const SynthConfig& cfg) {
  cfg.validate();
  SceneDataset ds;
  for (const auto& c : cfg.classes) ds.class_names.push_back(class_name(c));
  const auto classes = Index(cfg.classes.size());
  auto make = [&](Index per_class, std::uint64_t split_tag, bool stress, const std::string& split) {
    std::vector<LabeledImage> items;
    for (Index c = 0; c < classes; ++c)
      for (Index i = 0; i < per_class; ++i) {
        auto item = generate_scene(cfg, c, (split_tag << 32) | std::uint64_t(c * per_class + i), stress);
        char name[32];
        std::snprintf(name, sizeof name, "img_%04lld.pgm", static_cast<long long>(i));
        item.path = split + "/" + ds.class_names[std::size_t(c)] + "/" + name;
        items.push_back(std::move(item));
      }
    return items;
  };
  ds.train = make(cfg.train_per_class, 1, false, "train");
  ds.test = make(cfg.test_per_class, 2, cfg.layout_stress_test && cfg.layout == Layout::quadrant, "test");
  return ds;
}

std::vector<LabeledImage> generate_source_set(Index per_glyph, Index side, double noise_std, std::uint64_t seed) {
  std::vector<LabeledImage> out;
  for (int g = 0; g < kGlyphCount; ++g)
    for (Index i = 0; i < per_glyph; ++i) {
      Rng rng(derive_seed(seed, (std::uint64_t(3) << 32) | std::uint64_t(g * per_glyph + i)));
      LabeledImage item{Image(side, side, 1), g, {}, {}, {}};
      const auto size =
          std::clamp<Index>(Index(std::lround(rng.uniform(0.4, 0.8) * double(side))), 2, side);
      const Box box{Index(rng.below(std::uint64_t(side - size + 1))), Index(rng.below(std::uint64_t(side - size + 1))),
                    size};
      draw_glyph(item.image, Glyph(g), box, float(rng.uniform(0.4, 1.0)));
      item.boxes.push_back(box);
      item.glyphs.push_back(Glyph(g));
      add_noise(item.image, noise_std, rng);
      char name[32];
      std::snprintf(name, sizeof name, "img_%04lld.pgm", static_cast<long long>(i));
      item.path = "source/" + to_string(Glyph(g)) + "/" + name;
      out.push_back(std::move(item));
    }
  return out;
}

void save_split(const fs::path& root, const std::string& split, const std::vector<LabeledImage>& items,
                const std::vector<std::string>& class_names) {
  std::string manifest;
  for (const auto& item : items) {
    std::string rel = item.path;
    if (rel.empty()) {
      rel = split + "/" + class_names.at(std::size_t(item.label)) + "/img_" + std::to_string(&item - items.data()) +
            ".pgm";
    }
    save_image(root / rel, item.image);
    manifest += rel + " " + std::to_string(item.label) + "\n";
  }
  write_file_atomic(root / (split + ".txt"), manifest);
}

std::vector<LabeledImage> load_split(const fs::path& root, const std::string& split,
                                     std::vector<std::string>* class_names) {
  std::vector<LabeledImage> items;
  const fs::path manifest = root / (split + ".txt");
  std::map<Index, std::string> names;
  if (fs::exists(manifest)) {
    std::istringstream in(read_file(manifest));
    std::string line;
    std::uint64_t offset = 0;
    while (std::getline(in, line)) {
      if (!line.empty()) {
        const auto space = line.rfind(' ');
        if (space == std::string::npos) throw FormatError("manifest line lacks a class index", offset);
        LabeledImage item;
        item.path = line.substr(0, space);
        try {
          item.label = Index(std::stoll(line.substr(space + 1)));
        } catch (const std::exception&) {
          throw FormatError("manifest class index is not an integer", offset + space + 1);
        }
        item.image = load_image(root / item.path);
        names[item.label] = fs::path(item.path).parent_path().filename().string();
        items.push_back(std::move(item));
      }
      offset += line.size() + 1;
    }
  } else {
    const fs::path dir = root / split;
    if (!fs::is_directory(dir)) throw IoError("no manifest or directory for split '" + split + "' under " + root.string());
    std::vector<std::string> dirs;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_directory()) dirs.push_back(e.path().filename().string());
    }
    std::sort(dirs.begin(), dirs.end());
    for (std::size_t c = 0; c < dirs.size(); ++c) {
      names[Index(c)] = dirs[c];
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(dir / dirs[c])) {
        const auto ext = e.path().extension().string();
        if (e.is_regular_file() && (ext == ".pgm" || ext == ".ppm")) files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) {
        LabeledImage item;
        item.path = fs::relative(f, root).generic_string();
        item.label = Index(c);
        item.image = load_image(f);
        items.push_back(std::move(item));
      }
    }
  }
  if (class_names) {
    class_names->clear();
    for (const auto& [label, name] : names) {
      if (label >= Index(class_names->size())) class_names->resize(std::size_t(label + 1));
      (*class_names)[std::size_t(label)] = name;
    }
  }
  return items;
}

}  // namespace s2ica
